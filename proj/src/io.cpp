#include "skamp/io.hpp"

#include <cstring>

#include "skamp/errors.hpp"

namespace skamp::io {

void write_u64(std::ostream& os, std::uint64_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_f64(std::ostream& os, double v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_f64_array(std::ostream& os, std::span<const double> v) {
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::uint64_t read_u64(std::istream& is) {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!is) throw ValidationError("binary read: truncated u64");
    return v;
}

double read_f64(std::istream& is) {
    double v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!is) throw ValidationError("binary read: truncated f64");
    return v;
}

std::vector<double> read_f64_array(std::istream& is, std::size_t count) {
    std::vector<double> v(count);
    is.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!is) throw ValidationError("binary read: truncated f64 array");
    return v;
}

void dump_vector(const std::filesystem::path& path, std::span<const double> v) {
    AtomicFileWriter w(path);
    write_u64(w.stream(), v.size());
    write_f64_array(w.stream(), v);
    w.commit();
}

std::vector<double> load_vector(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ValidationError("cannot open vector file: " + path.string());
    const auto n = read_u64(is);
    return read_f64_array(is, n);
}

AtomicFileWriter::AtomicFileWriter(const std::filesystem::path& path)
    : target_(path), temp_(path) {
    temp_ += ".tmp";
    stream_.open(temp_, std::ios::binary | std::ios::trunc);
    if (!stream_)
        throw ValidationError("cannot open for writing: " + temp_.string());
}

AtomicFileWriter::~AtomicFileWriter() {
    if (!committed_) {
        stream_.close();
        std::error_code ec;
        std::filesystem::remove(temp_, ec);
    }
}

void AtomicFileWriter::commit() {
    stream_.flush();
    if (!stream_) throw ValidationError("write failed: " + temp_.string());
    stream_.close();
    std::filesystem::rename(temp_, target_);
    committed_ = true;
}

}  // namespace skamp::io

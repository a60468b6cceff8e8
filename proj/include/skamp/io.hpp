#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace skamp::io {

static_assert(std::endian::native == std::endian::little,
              "binary formats are little-endian; big-endian hosts unsupported");

void write_u64(std::ostream& os, std::uint64_t v);
void write_f64(std::ostream& os, double v);
void write_f64_array(std::ostream& os, std::span<const double> v);
std::uint64_t read_u64(std::istream& is);
double read_f64(std::istream& is);
std::vector<double> read_f64_array(std::istream& is, std::size_t count);

// Plain vector dump: 8-byte length header, then length doubles.
void dump_vector(const std::filesystem::path& path, std::span<const double> v);
std::vector<double> load_vector(const std::filesystem::path& path);

// Writes `path` atomically (temp file + rename) so concurrent readers never
// observe a partial file.
class AtomicFileWriter {
public:
    explicit AtomicFileWriter(const std::filesystem::path& path);
    ~AtomicFileWriter();
    std::ofstream& stream() { return stream_; }
    void commit();

private:
    std::filesystem::path target_, temp_;
    std::ofstream stream_;
    bool committed_ = false;
};

}  // namespace skamp::io

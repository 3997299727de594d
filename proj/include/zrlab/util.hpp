#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace zrlab {

// Error categories map onto process exit codes (see tools/zrlab_main.cpp):
// ConfigError -> 2, DataError -> 3, NumericError -> 4.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// FNV-1a 64-bit content hash. Not cryptographic; used for config hashes and
// run-manifest output fingerprints.
std::uint64_t fnv1a64(const void* data, std::size_t len);
std::uint64_t fnv1a64(std::string_view s);
std::string hash_hex(std::uint64_t h);

std::string read_file(const std::string& path);
// Write-temp-then-rename so partially written artifacts never appear.
void atomic_write_file(const std::string& path, std::string_view contents);

std::string trim(std::string_view s);
std::vector<std::string> split_ws(std::string_view s);

// Shortest decimal form that round-trips the exact double (std::to_chars).
std::string format_double(double v);

}  // namespace zrlab

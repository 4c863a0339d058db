#pragma once

#include <adaptrack/error.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace adaptrack {

struct Tensor {
    std::vector<std::uint64_t> shape;
    std::vector<float> data;

    /// Product of the shape (1 for a scalar).
    std::uint64_t element_count() const;

    bool operator==(const Tensor&) const = default;
};

/// Named float32 tensors plus free-form text metadata. Names iterate in byte order.
struct TensorArchive {
    std::map<std::string, Tensor> entries;
    std::map<std::string, std::string> metadata;

    /// Throws ArchiveError(shape_mismatch) when a tensor's data length differs from its shape.
    void validate() const;
};

/// Bitwise equality of names, shapes, payloads and metadata.
bool bit_equal(const TensorArchive& a, const TensorArchive& b);

class ArchiveError : public DataError {
public:
    enum class Kind { bad_magic, unsupported_version, truncated, shape_mismatch, checksum_mismatch, malformed };

    ArchiveError(Kind kind, const std::string& what) : DataError(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

inline constexpr std::uint16_t kArchiveVersion = 1;

/// Layout, all integers little-endian:
///
///     "TARC" | u16 version | u32 entry count
///     per entry, sorted by name:
///         u16 name length | name bytes | u8 rank | rank x u64 dims | f32 payload
///     u32 metadata count
///     per key, sorted: u16 key length | key | u32 value length | value
///     u32 CRC-32 of every preceding byte
std::vector<std::uint8_t> encode_archive(const TensorArchive& archive);
TensorArchive decode_archive(std::span<const std::uint8_t> bytes);

void write_archive(const TensorArchive& archive, std::ostream& out);
TensorArchive read_archive(std::istream& in);

void save_archive(const TensorArchive& archive, const std::filesystem::path& path);
TensorArchive load_archive(const std::filesystem::path& path);

}  // namespace adaptrack

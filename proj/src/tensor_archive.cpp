#include <adaptrack/tensor_archive.hpp>

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

namespace adaptrack {
namespace {

using Kind = ArchiveError::Kind;

class Writer {
public:
    void u8(std::uint8_t v) { bytes_.push_back(v); }
    void u16(std::uint16_t v) { le(v, 2); }
    void u32(std::uint32_t v) { le(v, 4); }
    void u64(std::uint64_t v) { le(v, 8); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void text(const std::string& s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }

    std::vector<std::uint8_t>& bytes() { return bytes_; }

private:
    void le(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) {
            bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
        }
    }
    std::vector<std::uint8_t> bytes_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
    std::uint64_t u64() { return le(8); }
    std::string text(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    void floats(std::vector<float>& out, std::uint64_t count) {
        if (count > remaining() / 4) {
            throw ArchiveError(Kind::truncated, "archive truncated inside a tensor payload");
        }
        out.resize(count);
        for (auto& v : out) {
            v = std::bit_cast<float>(u32());
        }
    }

    std::size_t position() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (n > remaining()) {
            throw ArchiveError(Kind::truncated, "archive truncated at byte " + std::to_string(pos_));
        }
    }
    std::uint64_t le(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) {
            v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        }
        pos_ += static_cast<std::size_t>(n);
        return v;
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

std::uint32_t crc_of(std::span<const std::uint8_t> bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    std::size_t done = 0;
    while (done < bytes.size()) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - done, 1u << 30));
        crc = crc32(crc, bytes.data() + done, chunk);
        done += chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::uint64_t Tensor::element_count() const {
    std::uint64_t n = 1;
    for (auto d : shape) {
        if (d != 0 && n > std::numeric_limits<std::uint64_t>::max() / d) {
            throw ArchiveError(Kind::shape_mismatch, "tensor shape overflows");
        }
        n *= d;
    }
    return n;
}

void TensorArchive::validate() const {
    for (const auto& [name, t] : entries) {
        if (name.empty() || name.size() > std::numeric_limits<std::uint16_t>::max()) {
            throw ArchiveError(Kind::malformed, "tensor name length out of range: '" + name + "'");
        }
        if (t.shape.size() > std::numeric_limits<std::uint8_t>::max()) {
            throw ArchiveError(Kind::shape_mismatch, "tensor " + name + ": rank above 255");
        }
        if (t.element_count() != t.data.size()) {
            throw ArchiveError(Kind::shape_mismatch, "tensor " + name + ": shape holds " +
                                                         std::to_string(t.element_count()) + " values, data has " +
                                                         std::to_string(t.data.size()));
        }
    }
    for (const auto& [key, value] : metadata) {
        if (key.size() > std::numeric_limits<std::uint16_t>::max() ||
            value.size() > std::numeric_limits<std::uint32_t>::max()) {
            throw ArchiveError(Kind::malformed, "metadata entry too large: " + key);
        }
    }
}

bool bit_equal(const TensorArchive& a, const TensorArchive& b) {
    if (a.metadata != b.metadata || a.entries.size() != b.entries.size()) {
        return false;
    }
    for (auto ia = a.entries.begin(), ib = b.entries.begin(); ia != a.entries.end(); ++ia, ++ib) {
        if (ia->first != ib->first || ia->second.shape != ib->second.shape ||
            ia->second.data.size() != ib->second.data.size()) {
            return false;
        }
        if (!ia->second.data.empty() &&
            std::memcmp(ia->second.data.data(), ib->second.data.data(), ia->second.data.size() * sizeof(float)) != 0) {
            return false;
        }
    }
    return true;
}

std::vector<std::uint8_t> encode_archive(const TensorArchive& archive) {
    archive.validate();
    if (archive.entries.size() > std::numeric_limits<std::uint32_t>::max()) {
        throw ArchiveError(Kind::malformed, "too many entries");
    }
    Writer w;
    w.text("TARC");
    w.u16(kArchiveVersion);
    w.u32(static_cast<std::uint32_t>(archive.entries.size()));
    for (const auto& [name, t] : archive.entries) {
        w.u16(static_cast<std::uint16_t>(name.size()));
        w.text(name);
        w.u8(static_cast<std::uint8_t>(t.shape.size()));
        for (auto d : t.shape) {
            w.u64(d);
        }
        for (float v : t.data) {
            w.f32(v);
        }
    }
    w.u32(static_cast<std::uint32_t>(archive.metadata.size()));
    for (const auto& [key, value] : archive.metadata) {
        w.u16(static_cast<std::uint16_t>(key.size()));
        w.text(key);
        w.u32(static_cast<std::uint32_t>(value.size()));
        w.text(value);
    }
    const auto crc = crc_of(w.bytes());
    w.u32(crc);
    return std::move(w.bytes());
}

TensorArchive decode_archive(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "TARC", 4) != 0) {
        throw ArchiveError(Kind::bad_magic, "not a tensor archive (bad magic)");
    }
    Reader r(bytes.subspan(4));
    const auto version = r.u16();
    if (version != kArchiveVersion) {
        throw ArchiveError(Kind::unsupported_version, "unsupported archive version " + std::to_string(version));
    }

    TensorArchive archive;
    const auto count = r.u32();
    std::string previous;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name_len = r.u16();
        auto name = r.text(name_len);
        if (name.empty() || (i > 0 && name <= previous)) {
            throw ArchiveError(Kind::malformed, "entry names must be non-empty, unique and sorted");
        }
        Tensor t;
        t.shape.resize(r.u8());
        for (auto& d : t.shape) {
            d = r.u64();
        }
        r.floats(t.data, t.element_count());
        previous = name;
        archive.entries.emplace(std::move(name), std::move(t));
    }
    const auto meta_count = r.u32();
    previous.clear();
    for (std::uint32_t i = 0; i < meta_count; ++i) {
        auto key = r.text(r.u16());
        if (i > 0 && key <= previous) {
            throw ArchiveError(Kind::malformed, "metadata keys must be unique and sorted");
        }
        auto value = r.text(r.u32());
        previous = key;
        archive.metadata.emplace(std::move(key), std::move(value));
    }
    const std::size_t body_end = 4 + r.position();
    const auto stored_crc = r.u32();
    if (r.remaining() != 0) {
        throw ArchiveError(Kind::malformed, "trailing bytes after archive checksum");
    }
    if (stored_crc != crc_of(bytes.first(body_end))) {
        throw ArchiveError(Kind::checksum_mismatch, "archive checksum mismatch");
    }
    return archive;
}

void write_archive(const TensorArchive& archive, std::ostream& out) {
    const auto bytes = encode_archive(archive);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw DataError("archive write failed");
    }
}

TensorArchive read_archive(std::istream& in) {
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_archive(bytes);
}

void save_archive(const TensorArchive& archive, const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError(path.string() + ": cannot open for writing");
    }
    try {
        write_archive(archive, out);
    } catch (const ArchiveError&) {
        throw;
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

TensorArchive load_archive(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError(path.string() + ": cannot open for reading");
    }
    try {
        return read_archive(in);
    } catch (const ArchiveError& e) {
        throw ArchiveError(e.kind(), path.string() + ": " + e.what());
    }
}

}  // namespace adaptrack

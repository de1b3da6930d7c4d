#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lcfl {

/// Append-only little-endian byte buffer for model/generator serialization.
class ByteWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u32(std::uint32_t v);
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void u64(std::uint64_t v);
    void f64(double v);
    void f64_array(std::span<const double> values);

    const std::vector<std::uint8_t>& data() const { return buf_; }
    std::vector<std::uint8_t> take() { return std::move(buf_); }

private:
    std::vector<std::uint8_t> buf_;
};

/// Serialized model/generator blobs share one convention: this magic, then a
/// one-byte type tag, then the type's payload.
inline constexpr std::uint8_t kBlobMagic[4] = {'L', 'C', 'F', '1'};

class ByteReader;

/// Writes the shared blob header (magic + tag).
void write_blob_header(ByteWriter& w, std::uint8_t tag);
/// Checks the magic and returns the tag.
std::uint8_t read_blob_header(ByteReader& r);

/// Bounds-checked little-endian reader. Out-of-range reads throw
/// std::runtime_error naming the context and byte offset.
class ByteReader {
public:
    ByteReader(std::span<const std::uint8_t> data, std::string context)
        : data_(data), context_(std::move(context)) {}

    std::uint8_t u8();
    std::uint32_t u32();
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    std::uint64_t u64();
    double f64();
    std::vector<double> f64_array(std::size_t count);

    std::size_t remaining() const { return data_.size() - pos_; }
    /// Throws if any bytes are left unconsumed.
    void expect_end() const;

private:
    void need(std::size_t n) const;

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
    std::string context_;
};

}  // namespace lcfl

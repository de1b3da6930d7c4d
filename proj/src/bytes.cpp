#include "lcfl/bytes.hpp"

#include <cstring>
#include <limits>
#include <stdexcept>

static_assert(std::numeric_limits<double>::is_iec559, "IEEE-754 doubles required");

namespace lcfl {

void ByteWriter::u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

void ByteWriter::u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

void ByteWriter::f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    u64(bits);
}

void ByteWriter::f64_array(std::span<const double> values) {
    for (double v : values) {
        f64(v);
    }
}

void ByteReader::need(std::size_t n) const {
    if (pos_ + n > data_.size()) {
        throw std::runtime_error(context_ + ": truncated at byte " + std::to_string(pos_) +
                                 " (need " + std::to_string(n) + ", have " +
                                 std::to_string(data_.size() - pos_) + ")");
    }
}

std::uint8_t ByteReader::u8() {
    need(1);
    return data_[pos_++];
}

std::uint32_t ByteReader::u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
    }
    pos_ += 4;
    return v;
}

std::uint64_t ByteReader::u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    }
    pos_ += 8;
    return v;
}

double ByteReader::f64() {
    std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
}

std::vector<double> ByteReader::f64_array(std::size_t count) {
    std::vector<double> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back(f64());
    }
    return out;
}

void write_blob_header(ByteWriter& w, std::uint8_t tag) {
    for (std::uint8_t m : kBlobMagic) {
        w.u8(m);
    }
    w.u8(tag);
}

std::uint8_t read_blob_header(ByteReader& r) {
    for (std::uint8_t m : kBlobMagic) {
        if (r.u8() != m) {
            throw std::runtime_error("blob decode: bad magic");
        }
    }
    return r.u8();
}

void ByteReader::expect_end() const {
    if (pos_ != data_.size()) {
        throw std::runtime_error(context_ + ": " + std::to_string(data_.size() - pos_) +
                                 " trailing bytes");
    }
}

}  // namespace lcfl

#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace txpoc {

/// 256-bit EVM word with wrapping arithmetic.
using Word = boost::multiprecision::number<boost::multiprecision::cpp_int_backend<
    256, 256, boost::multiprecision::unsigned_magnitude, boost::multiprecision::unchecked, void>>;

using Bytes = std::vector<std::uint8_t>;
using Hash = std::array<std::uint8_t, 32>;

inline Word word_max() { return ~Word{0}; }

inline int hex_nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

inline std::string_view strip_0x(std::string_view s) {
  if (s.size() >= 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) s.remove_prefix(2);
  return s;
}

inline Bytes bytes_from_hex(std::string_view hex) {
  hex = strip_0x(hex);
  Bytes out;
  out.reserve(hex.size() / 2 + 1);
  std::size_t i = 0;
  if (hex.size() % 2 == 1) {
    int v = hex_nibble(hex[0]);
    if (v < 0) throw std::invalid_argument("bad hex digit");
    out.push_back(static_cast<std::uint8_t>(v));
    i = 1;
  }
  for (; i < hex.size(); i += 2) {
    int hi = hex_nibble(hex[i]);
    int lo = hex_nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) throw std::invalid_argument("bad hex digit");
    out.push_back(static_cast<std::uint8_t>(hi << 4 | lo));
  }
  return out;
}

template <typename Range>
std::string to_hex(const Range& bytes, bool prefix = true) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s = prefix ? "0x" : "";
  for (std::uint8_t b : bytes) {
    s.push_back(digits[b >> 4]);
    s.push_back(digits[b & 0xf]);
  }
  return s;
}

inline Word word_from_hex(std::string_view hex) {
  hex = strip_0x(hex);
  if (hex.empty()) return 0;
  if (hex.size() > 64) throw std::invalid_argument("hex word longer than 256 bits");
  Word w = 0;
  for (char c : hex) {
    int v = hex_nibble(c);
    if (v < 0) throw std::invalid_argument("bad hex digit");
    w = (w << 4) | Word(v);
  }
  return w;
}

/// Parses a decimal or 0x-prefixed literal.
inline Word word_from_string(std::string_view s) {
  if (s.size() >= 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) return word_from_hex(s);
  if (s.empty()) throw std::invalid_argument("empty number");
  Word w = 0;
  for (char c : s) {
    if (c < '0' || c > '9') throw std::invalid_argument("bad decimal digit");
    w = w * 10 + Word(c - '0');
  }
  return w;
}

inline std::string word_to_hex(const Word& w) {
  if (w == 0) return "0x0";
  std::string s;
  Word v = w;
  static constexpr char digits[] = "0123456789abcdef";
  while (v != 0) {
    s.push_back(digits[static_cast<unsigned>(v & 0xf)]);
    v >>= 4;
  }
  return "0x" + std::string(s.rbegin(), s.rend());
}

inline std::string word_to_dec(const Word& w) { return w.str(); }

/// Big-endian 32-byte encoding.
inline Bytes word_to_bytes(const Word& w) {
  Bytes out(32, 0);
  Word v = w;
  for (int i = 31; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v & 0xff);
    v >>= 8;
  }
  return out;
}

/// Interprets up to 32 big-endian bytes; shorter input is treated as the high bytes (EVM MLOAD style).
inline Word word_from_bytes(const std::uint8_t* data, std::size_t len) {
  Word w = 0;
  for (std::size_t i = 0; i < 32; ++i) {
    w <<= 8;
    if (i < len) w |= Word(data[i]);
  }
  return w;
}

inline Word word_from_bytes(const Bytes& b) { return word_from_bytes(b.data(), b.size()); }

/// Right-aligned interpretation (e.g. a 20-byte address to a word).
inline Word word_from_be(const std::uint8_t* data, std::size_t len) {
  Word w = 0;
  for (std::size_t i = 0; i < len; ++i) w = (w << 8) | Word(data[i]);
  return w;
}
inline Word word_from_be(const Bytes& b) { return word_from_be(b.data(), std::min<std::size_t>(b.size(), 32)); }

class Address {
 public:
  Address() = default;
  explicit Address(const std::array<std::uint8_t, 20>& b) : bytes_(b) {}

  static Address from_word(const Word& w) {
    std::array<std::uint8_t, 20> b{};
    Word v = w;
    for (int i = 19; i >= 0; --i) {
      b[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v & 0xff);
      v >>= 8;
    }
    return Address(b);
  }

  static Address from_hex(std::string_view hex) {
    auto raw = bytes_from_hex(hex);
    if (raw.size() > 20) throw std::invalid_argument("address longer than 20 bytes");
    std::array<std::uint8_t, 20> b{};
    std::copy(raw.begin(), raw.end(), b.begin() + static_cast<std::ptrdiff_t>(20 - raw.size()));
    return Address(b);
  }

  Word to_word() const { return word_from_be(bytes_.data(), 20); }
  std::string hex() const { return to_hex(bytes_); }
  bool is_zero() const {
    for (auto b : bytes_)
      if (b) return false;
    return true;
  }
  const std::array<std::uint8_t, 20>& bytes() const { return bytes_; }

  auto operator<=>(const Address&) const = default;

 private:
  std::array<std::uint8_t, 20> bytes_{};
};

inline Word address_mask() { return (Word(1) << 160) - 1; }

// Keccak-256 (original padding, as used by the EVM).
namespace detail {

inline std::uint64_t rotl64(std::uint64_t x, unsigned n) { return n == 0 ? x : (x << n) | (x >> (64 - n)); }

inline void keccak_f1600(std::array<std::uint64_t, 25>& st) {
  static constexpr std::uint64_t rc[24] = {
      0x0000000000000001ULL, 0x0000000000008082ULL, 0x800000000000808aULL, 0x8000000080008000ULL,
      0x000000000000808bULL, 0x0000000080000001ULL, 0x8000000080008081ULL, 0x8000000000008009ULL,
      0x000000000000008aULL, 0x0000000000000088ULL, 0x0000000080008009ULL, 0x000000008000000aULL,
      0x000000008000808bULL, 0x800000000000008bULL, 0x8000000000008089ULL, 0x8000000000008003ULL,
      0x8000000000008002ULL, 0x8000000000000080ULL, 0x000000000000800aULL, 0x800000008000000aULL,
      0x8000000080008081ULL, 0x8000000000008080ULL, 0x0000000080000001ULL, 0x8000000080008008ULL};
  static constexpr unsigned rotc[24] = {1,  3,  6,  10, 15, 21, 28, 36, 45, 55, 2,  14,
                                        27, 41, 56, 8,  25, 43, 62, 18, 39, 61, 20, 44};
  static constexpr unsigned piln[24] = {10, 7,  11, 17, 18, 3, 5,  16, 8,  21, 24, 4,
                                        15, 23, 19, 13, 12, 2, 20, 14, 22, 9,  6,  1};
  for (int round = 0; round < 24; ++round) {
    std::uint64_t bc[5];
    for (int i = 0; i < 5; ++i) bc[i] = st[i] ^ st[i + 5] ^ st[i + 10] ^ st[i + 15] ^ st[i + 20];
    for (int i = 0; i < 5; ++i) {
      std::uint64_t t = bc[(i + 4) % 5] ^ rotl64(bc[(i + 1) % 5], 1);
      for (int j = 0; j < 25; j += 5) st[j + i] ^= t;
    }
    std::uint64_t t = st[1];
    for (int i = 0; i < 24; ++i) {
      unsigned j = piln[i];
      std::uint64_t tmp = st[j];
      st[j] = rotl64(t, rotc[i]);
      t = tmp;
    }
    for (int j = 0; j < 25; j += 5) {
      for (int i = 0; i < 5; ++i) bc[i] = st[j + i];
      for (int i = 0; i < 5; ++i) st[j + i] ^= (~bc[(i + 1) % 5]) & bc[(i + 2) % 5];
    }
    st[0] ^= rc[round];
  }
}

}  // namespace detail

inline Hash keccak256(const std::uint8_t* data, std::size_t len) {
  constexpr std::size_t rate = 136;
  std::array<std::uint64_t, 25> st{};
  auto absorb = [&](const std::uint8_t* block) {
    for (std::size_t i = 0; i < rate / 8; ++i) {
      std::uint64_t lane = 0;
      for (int b = 7; b >= 0; --b) lane = (lane << 8) | block[i * 8 + static_cast<std::size_t>(b)];
      st[i] ^= lane;
    }
    detail::keccak_f1600(st);
  };
  while (len >= rate) {
    absorb(data);
    data += rate;
    len -= rate;
  }
  std::array<std::uint8_t, rate> last{};
  std::copy(data, data + len, last.begin());
  last[len] ^= 0x01;
  last[rate - 1] ^= 0x80;
  absorb(last.data());
  Hash out{};
  for (std::size_t i = 0; i < 32; ++i) out[i] = static_cast<std::uint8_t>(st[i / 8] >> (8 * (i % 8)));
  return out;
}

inline Hash keccak256(const Bytes& b) { return keccak256(b.data(), b.size()); }
inline Hash keccak256(std::string_view s) {
  return keccak256(reinterpret_cast<const std::uint8_t*>(s.data()), s.size());
}

inline Word hash_to_word(const Hash& h) { return word_from_be(h.data(), 32); }

/// First four bytes of keccak256(signature), as used for ABI function selectors.
inline std::uint32_t selector_of(std::string_view canonical_signature) {
  auto h = keccak256(canonical_signature);
  return static_cast<std::uint32_t>(h[0]) << 24 | static_cast<std::uint32_t>(h[1]) << 16 |
         static_cast<std::uint32_t>(h[2]) << 8 | h[3];
}

inline std::string selector_hex(std::uint32_t sel) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s = "0x";
  for (int shift = 28; shift >= 0; shift -= 4) s.push_back(digits[(sel >> shift) & 0xf]);
  return s;
}

/// Two's-complement sign check.
inline bool is_negative(const Word& w) { return bit_test(w, 255); }
inline Word negate(const Word& w) { return ~w + 1; }

}  // namespace txpoc

#pragma once

// Keyed embedding tables, mean-pooled phrase vectors and the NREMB1 file format.
//
// NREMB1 layout (all integers little-endian):
//   "NREMB1" | u32 dim | u32 count | count x ( u16 key_len | key bytes | dim x f32 )

#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nr/detail/text.hpp"
#include "nr/error.hpp"

namespace nr {

using Vector = std::vector<double>;

template <typename Real>
class BasicLexicon {
 public:
  using Row = std::vector<Real>;

  BasicLexicon() = default;
  explicit BasicLexicon(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw ValidationError("lexicon dim must be positive");
  }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return table_.size(); }
  const std::map<std::string, Row>& table() const { return table_; }

  const Row* find(std::string_view key) const {
    const auto it = table_.find(std::string(key));
    return it == table_.end() ? nullptr : &it->second;
  }
  Row* find_mutable(std::string_view key) {
    const auto it = table_.find(std::string(key));
    return it == table_.end() ? nullptr : &it->second;
  }

  void insert(std::string key, Row row) {
    if (key.empty()) throw ValidationError("lexicon keys must be non-empty");
    if (row.size() != dim_)
      throw ValidationError("dim mismatch for '" + key + "': expected " + std::to_string(dim_) +
                            ", got " + std::to_string(row.size()));
    for (const auto v : row)
      if (!std::isfinite(v)) throw ValidationError("non-finite component for '" + key + "'");
    table_.insert_or_assign(std::move(key), std::move(row));
  }

  bool operator==(const BasicLexicon&) const = default;

 private:
  std::size_t dim_ = 0;
  std::map<std::string, Row> table_;
};

using Lexicon = BasicLexicon<float>;

namespace detail {

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

/// Standard normal draws by Box-Muller over raw mt19937_64 output, so the
/// sequence does not depend on the standard library's distributions.
class NormalSource {
 public:
  explicit NormalSource(std::uint64_t seed) : rng_(seed) {}

  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
  double spare_ = 0;
  bool has_spare_ = false;
};

inline Vector random_unit_vector(NormalSource& src, std::size_t dim) {
  Vector v(dim);
  double norm = 0;
  do {
    norm = 0;
    for (auto& x : v) {
      x = src();
      norm += x * x;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;
  return v;
}

}  // namespace detail

/// Deterministic unit vector for a token missing from the lexicon.
inline Vector oov_vector(std::string_view token, std::size_t dim) {
  detail::NormalSource src(detail::fnv1a(token));
  return detail::random_unit_vector(src, dim);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// Throws NumericError when either vector has zero norm.
inline double cosine(std::span<const double> a, std::span<const double> b) {
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) throw NumericError("cosine undefined for a zero-norm vector");
  return dot(a, b) / (na * nb);
}

/// Table keys a phrase pools over. A phrase stored whole (as exported by an
/// external embedder) is its own single key; otherwise its lowercase tokens.
template <typename Real>
std::vector<std::string> phrase_keys(const BasicLexicon<Real>& lexicon, std::string_view phrase) {
  const auto lower = detail::to_lower(detail::trim(phrase));
  if (lower.find(' ') != std::string::npos && lexicon.find(lower)) return {lower};
  return detail::split_words(lower);
}

template <typename Real>
Vector key_vector(const BasicLexicon<Real>& lexicon, const std::string& key) {
  if (const auto* row = lexicon.find(key)) return Vector(row->begin(), row->end());
  return oov_vector(key, lexicon.dim());
}

/// Mean of the per-token vectors; unknown tokens use oov_vector.
template <typename Real>
Vector embed_phrase(const BasicLexicon<Real>& lexicon, std::string_view phrase) {
  const auto keys = phrase_keys(lexicon, phrase);
  if (keys.empty()) throw ValidationError("cannot embed an empty phrase");
  Vector sum(lexicon.dim(), 0.0);
  for (const auto& k : keys) {
    const auto v = key_vector(lexicon, k);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += v[i];
  }
  for (auto& x : sum) x /= static_cast<double>(keys.size());
  return sum;
}

namespace detail {

inline constexpr std::string_view kLexiconMagic = "NREMB1";

inline void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  bool has(std::size_t n) const { return bytes_.size() - pos_ >= n; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint16_t u16() {
    const auto v = static_cast<std::uint16_t>(static_cast<unsigned char>(bytes_[pos_]) |
                                              (static_cast<unsigned char>(bytes_[pos_ + 1]) << 8));
    pos_ += 2;
    return v;
  }
  std::string_view take(std::size_t n) {
    const auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string serialize_lexicon(const Lexicon& lexicon) {
  std::string out(detail::kLexiconMagic);
  detail::put_u32(out, static_cast<std::uint32_t>(lexicon.dim()));
  detail::put_u32(out, static_cast<std::uint32_t>(lexicon.size()));
  for (const auto& [key, row] : lexicon.table()) {
    if (key.size() > 0xffff) throw ValidationError("lexicon key longer than 65535 bytes");
    detail::put_u16(out, static_cast<std::uint16_t>(key.size()));
    out += key;
    for (const float f : row) detail::put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

/// Parses NREMB1 bytes. `expected_dim` of 0 accepts any dimension.
inline Lexicon deserialize_lexicon(std::string_view bytes, std::size_t expected_dim = 0) {
  if (bytes.substr(0, detail::kLexiconMagic.size()) != detail::kLexiconMagic)
    throw ParseError("not a lexicon file");
  detail::ByteReader in(bytes.substr(detail::kLexiconMagic.size()));
  if (!in.has(8)) throw ParseError("truncated header");
  const std::uint32_t dim = in.u32();
  const std::uint32_t count = in.u32();
  if (dim == 0) throw ParseError("lexicon dim is zero");
  if (expected_dim != 0 && dim != expected_dim)
    throw ParseError("dim mismatch: expected " + std::to_string(expected_dim) + ", got " +
                     std::to_string(dim));

  Lexicon lexicon(dim);
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto truncated = [k] { return ParseError("truncated at entry " + std::to_string(k)); };
    if (!in.has(2)) throw truncated();
    const auto len = in.u16();
    if (!in.has(len + std::size_t{4} * dim)) throw truncated();
    std::string key(in.take(len));
    if (key.empty()) throw ParseError("empty key at entry " + std::to_string(k));
    if (lexicon.find(key)) throw ParseError("duplicate key '" + key + "' at entry " + std::to_string(k));
    Lexicon::Row row(dim);
    for (auto& f : row) {
      f = std::bit_cast<float>(in.u32());
      if (!std::isfinite(f)) throw ParseError("non-finite component at entry " + std::to_string(k));
    }
    lexicon.insert(std::move(key), std::move(row));
  }
  if (in.remaining() != 0) throw ParseError("trailing bytes after " + std::to_string(count) + " entries");
  return lexicon;
}

inline void save_lexicon(const Lexicon& lexicon, const std::string& path) {
  detail::write_file(path, serialize_lexicon(lexicon));
}

inline Lexicon load_lexicon(const std::string& path, std::size_t expected_dim = 0) {
  return deserialize_lexicon(detail::read_file(path), expected_dim);
}

}  // namespace nr

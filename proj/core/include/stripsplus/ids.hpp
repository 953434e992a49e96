#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace sps {

using ObjectId = uint16_t;
using PredId = uint16_t;
using SchemaId = uint16_t;
using NodeId = uint32_t;
using EdgeId = uint32_t;

// Ground atoms are packed into one word: 16 bits of predicate id, then up to
// four 12-bit object ids. All set operations and orderings reduce to integer
// compares, which the feature engine leans on heavily.
constexpr int kMaxAtomArity = 4;
constexpr ObjectId kMaxObjectId = 0x0fff;

struct GroundAtom {
  uint64_t bits = 0;

  GroundAtom() = default;
  explicit GroundAtom(uint64_t b) : bits(b) {}

  static GroundAtom pack(PredId pred, const ObjectId* args, int arity) {
    uint64_t b = static_cast<uint64_t>(pred) << 48;
    for (int i = 0; i < arity; ++i) {
      b |= static_cast<uint64_t>(args[i] & kMaxObjectId) << (12 * (3 - i));
    }
    return GroundAtom{b};
  }
  static GroundAtom pack(PredId pred, const std::vector<ObjectId>& args) {
    return pack(pred, args.data(), static_cast<int>(args.size()));
  }

  PredId pred() const { return static_cast<PredId>(bits >> 48); }
  ObjectId arg(int i) const {
    return static_cast<ObjectId>((bits >> (12 * (3 - i))) & kMaxObjectId);
  }

  bool operator==(const GroundAtom& o) const { return bits == o.bits; }
  bool operator<(const GroundAtom& o) const { return bits < o.bits; }
};

struct GroundAtomHash {
  size_t operator()(const GroundAtom& a) const {
    uint64_t x = a.bits * 0x9e3779b97f4a7c15ull;
    return static_cast<size_t>(x ^ (x >> 32));
  }
};

// Interned name table. Lookup is by exact string; ids are dense and stable
// in insertion order so serialization stays deterministic.
class SymbolTable {
 public:
  uint32_t intern(const std::string& name) {
    auto it = index_.find(name);
    if (it != index_.end()) return it->second;
    uint32_t id = static_cast<uint32_t>(names_.size());
    names_.push_back(name);
    index_.emplace(name, id);
    return id;
  }
  int find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? -1 : static_cast<int>(it->second);
  }
  const std::string& name(uint32_t id) const { return names_.at(id); }
  size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, uint32_t> index_;
};

// FNV-1a over bytes; used for file fingerprints and state hashing where the
// value must be identical across runs and platforms.
inline uint64_t fnv1a(const void* data, size_t n, uint64_t seed = 0xcbf29ce484222325ull) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  uint64_t h = seed;
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}
inline uint64_t fnv1a(const std::string& s) { return fnv1a(s.data(), s.size()); }

std::string to_hex(uint64_t v);

// Deterministic splittable RNG (splitmix64 core + xorshift escape); all
// sampler randomness flows from one seed through this.
struct Rng {
  uint64_t state;
  explicit Rng(uint64_t seed) : state(seed + 0x9e3779b97f4a7c15ull) {}
  uint64_t next() {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  // Unbiased enough for sampling decisions at desk scale.
  uint64_t below(uint64_t n) { return n == 0 ? 0 : next() % n; }
  Rng split(uint64_t stream) const { return Rng(state ^ (0x517cc1b727220a95ull * (stream + 1))); }
};

}  // namespace sps

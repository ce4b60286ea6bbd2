#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "lckasr/tensor.hpp"

namespace lckasr {

// One learnable tensor. `dims` is the logical shape written to disk (rank 4
// for conv weights, rank 1 for biases); `tensor` is its 4-D embedding.
struct ParamEntry {
    std::string name;
    std::vector<std::uint32_t> dims;
    Tensor tensor;
};

// Ordered, uniquely named parameter tensors. Iteration order is the graph
// walk order, which is deterministic for a fixed config.
class ParamStore {
public:
    void add(std::string name, std::vector<std::uint32_t> dims, Tensor tensor);

    bool contains(const std::string& name) const { return index_.count(name) != 0; }
    const Tensor& tensor(const std::string& name) const;
    Tensor& tensor(const std::string& name);

    const std::vector<ParamEntry>& entries() const { return entries_; }
    std::vector<ParamEntry>& entries() { return entries_; }
    std::size_t count() const { return entries_.size(); }
    std::size_t total_scalars() const;

    // Throws NumericError naming the first non-finite parameter.
    void validate_finite() const;

    std::uint64_t fingerprint = 0;
    std::uint32_t format_version = 1;

private:
    std::vector<ParamEntry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Weight file, little-endian, no alignment padding:
//   magic "LCW1" | version u32 | fingerprint u64 | entry count u32 |
//   per entry: name length u16, name bytes, rank u8, dims u32 x rank,
//   raw float32 data.
void save_param_store(const ParamStore& store, const std::string& path);
ParamStore load_param_store(const std::string& path);

}  // namespace lckasr

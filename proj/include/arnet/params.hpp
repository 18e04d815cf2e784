#pragma once

#include <cstddef>
#include <deque>
#include <map>
#include <string>
#include <string_view>

#include "arnet/tensor.hpp"

namespace arnet {

struct NamedTensor {
  std::string name;
  Tensor value;
  /// False for buffers such as batch-norm running statistics.
  bool trainable = true;
  /// Frozen tensors keep their values through optimizer steps.
  bool frozen = false;
};

/// Named tensors in insertion order with stable addresses.
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;
  ParamStore(ParamStore&&) = default;
  ParamStore& operator=(ParamStore&&) = default;

  /// Throws ConfigError on a duplicate name.
  Tensor& add(std::string name, Tensor value, bool trainable = true);

  bool contains(std::string_view name) const;
  Tensor& get(std::string_view name);
  const Tensor& get(std::string_view name) const;
  NamedTensor& entry(std::string_view name);

  std::deque<NamedTensor>& entries() { return entries_; }
  const std::deque<NamedTensor>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  /// Freezes every entry whose name starts with `prefix`.
  void freeze_prefix(std::string_view prefix);
  void zero_grad();
  /// Number of scalar values in trainable tensors.
  std::size_t trainable_count() const;

 private:
  std::deque<NamedTensor> entries_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

}  // namespace arnet

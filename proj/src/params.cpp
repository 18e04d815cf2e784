#include "arnet/params.hpp"

#include "arnet/error.hpp"

namespace arnet {

Tensor& ParamStore::add(std::string name, Tensor value, bool trainable) {
  if (index_.count(name) != 0) throw ConfigError("duplicate parameter name: " + name);
  index_.emplace(name, entries_.size());
  entries_.push_back(NamedTensor{std::move(name), std::move(value), trainable, false});
  return entries_.back().value;
}

bool ParamStore::contains(std::string_view name) const { return index_.find(name) != index_.end(); }

NamedTensor& ParamStore::entry(std::string_view name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter: " + std::string(name));
  return entries_[it->second];
}

Tensor& ParamStore::get(std::string_view name) { return entry(name).value; }

const Tensor& ParamStore::get(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter: " + std::string(name));
  return entries_[it->second].value;
}

void ParamStore::freeze_prefix(std::string_view prefix) {
  for (auto& e : entries_) {
    if (std::string_view(e.name).substr(0, prefix.size()) == prefix) e.frozen = true;
  }
}

void ParamStore::zero_grad() {
  for (auto& e : entries_) {
    if (e.trainable) e.value.zero_grad();
  }
}

std::size_t ParamStore::trainable_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) {
    if (e.trainable) n += e.value.size();
  }
  return n;
}

}  // namespace arnet

#include "gmrw/params.hpp"

#include "gmrw/errors.hpp"

namespace gmrw {

ad::Var ParamStore::create(const std::string& name, ad::Mat init) {
  if (items_.count(name) > 0) {
    throw ConfigError("ParamStore: duplicate parameter " + name);
  }
  ad::Var v = ad::Var::param(std::move(init));
  items_.emplace(name, v);
  return v;
}

const ad::Var& ParamStore::at(const std::string& name) const {
  auto it = items_.find(name);
  if (it == items_.end()) {
    throw ConfigError("ParamStore: unknown parameter " + name);
  }
  return it->second;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, var] : items_) {
    n += static_cast<std::size_t>(var.rows() * var.cols());
  }
  return n;
}

void ParamStore::zero_grads() {
  for (auto& [name, var] : items_) var.zero_grad();
}

}  // namespace gmrw

#pragma once

#include <cstddef>
#include <map>
#include <string>

#include "gmrw/ad.hpp"

namespace gmrw {

// Named learnable tensors. The map is ordered so initialization, optimizer
// sweeps and checkpoint layout are all deterministic.
class ParamStore {
 public:
  ad::Var create(const std::string& name, ad::Mat init);
  const ad::Var& at(const std::string& name) const;
  bool contains(const std::string& name) const { return items_.count(name) > 0; }

  std::map<std::string, ad::Var>& items() { return items_; }
  const std::map<std::string, ad::Var>& items() const { return items_; }

  std::size_t tensor_count() const { return items_.size(); }
  std::size_t scalar_count() const;
  void zero_grads();

 private:
  std::map<std::string, ad::Var> items_;
};

}  // namespace gmrw

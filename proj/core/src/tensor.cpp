#include "xlgen/tensor.hpp"

#include <algorithm>
#include <stdexcept>

namespace xlgen {

std::size_t ParameterStore::add(std::string name, std::string group, Eigen::Index rows,
                                Eigen::Index cols) {
  if (find(name)) throw std::logic_error("duplicate parameter name: " + name);
  params_.push_back(Parameter{std::move(name), std::move(group), Matrix::Zero(rows, cols),
                              Matrix::Zero(rows, cols)});
  return params_.size() - 1;
}

std::optional<std::size_t> ParameterStore::find(std::string_view name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  return std::nullopt;
}

std::vector<std::string> ParameterStore::groups() const {
  std::vector<std::string> out;
  for (const auto& p : params_) {
    if (std::find(out.begin(), out.end(), p.group) == out.end()) out.push_back(p.group);
  }
  return out;
}

std::size_t ParameterStore::numel() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p.grad.setZero();
}

}  // namespace xlgen

#include "sips/predictor.hpp"

#include <stdexcept>

namespace sips {

std::vector<double> OracleCleanPredictor::do_predict(
    std::span<const double> y, std::span<const double> context) const {
  if (context.size() != y.size())
    throw std::invalid_argument(
        "OracleCleanPredictor: paired clean context required");
  return {context.begin(), context.end()};
}

std::vector<double> PerturbedPredictor::do_predict(
    std::span<const double> y, std::span<const double> context) const {
  auto out = inner_->predict(y, context);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] *= alpha_;
    if (!beta_.empty()) out[i] += beta_.size() == 1 ? beta_[0] : beta_.at(i);
  }
  return out;
}

}  // namespace sips

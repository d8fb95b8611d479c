#include "tg/registry.hpp"

#include "tg/error.hpp"
#include "tg/solver.hpp"

namespace tg {

CertificateRegistry::Key CertificateRegistry::key_of(GameMode mode, int k) {
  return {static_cast<int>(counting_mode(mode)), k};
}

std::optional<int> CertificateRegistry::default_period(GameMode mode, int k) {
  if (counting_mode(mode) == GameMode::Hard) {
    if (k < 5) return std::nullopt;
    return 8;
  }
  if (k < 3) return std::nullopt;
  if (k == 3) return 5;
  if (k == 4) return 9;
  return 7;
}

std::shared_ptr<const WeightModel> CertificateRegistry::get(GameMode mode, int k) {
  const Key key = key_of(mode, k);
  std::lock_guard lock(mutex_);
  if (auto it = models_.find(key); it != models_.end()) return it->second;
  if (auto it = failures_.find(key); it != failures_.end()) throw Error(ErrorCode::Unsupported, it->second);

  const GameMode cmode = counting_mode(mode);
  const auto p = default_period(cmode, k);
  const std::string label = std::string(to_string(cmode)) + " k=" + std::to_string(k);
  if (!p) {
    failures_[key] = "no certificate for " + label;
    throw Error(ErrorCode::Unsupported, failures_[key]);
  }
  try {
    auto lambda = std::make_shared<const LambdaSet>(LambdaSet::build(k, PeriodRange{min_period(cmode), *p}, options_));
    const SolveResult result = solve(*lambda, cmode);
    auto cert = std::make_shared<const Certificate>(make_certificate(*lambda, cmode, result, "registry"));
    const auto report = verify_certificate(*cert, *lambda, options_.threads);
    if (!report.passed) throw Error(ErrorCode::Unsupported, "certificate for " + label + " failed verification");
    auto model = std::make_shared<const WeightModel>(lambda, cert);
    models_[key] = model;
    return model;
  } catch (const Error& e) {
    failures_[key] = "no certificate for " + label + ": " + e.what();
    throw Error(ErrorCode::Unsupported, failures_[key]);
  }
}

std::shared_ptr<const WeightModel> CertificateRegistry::try_get(GameMode mode, int k) noexcept {
  try {
    return get(mode, k);
  } catch (...) {
    return nullptr;
  }
}

void CertificateRegistry::add(const Certificate& cert) {
  auto lambda = std::make_shared<const LambdaSet>(LambdaSet::build(cert.k, cert.range, options_));
  const auto report = verify_certificate(cert, *lambda, options_.threads);
  if (!report.passed) throw Error(ErrorCode::InvalidArgument, "certificate failed verification");
  auto model = std::make_shared<const WeightModel>(lambda, std::make_shared<const Certificate>(cert));
  std::lock_guard lock(mutex_);
  const Key key = key_of(cert.mode, cert.k);
  models_[key] = std::move(model);
  failures_.erase(key);
}

}  // namespace tg

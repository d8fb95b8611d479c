#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>

#include "tg/certificate.hpp"
#include "tg/game.hpp"
#include "tg/lambda.hpp"

namespace tg {

// Verified certificates per (counting mode, k), solved on first use.
class CertificateRegistry {
 public:
  explicit CertificateRegistry(LambdaBuildOptions options = {}) : options_(options) {}

  // Period used when solving on demand; nullopt when no certificate exists
  // (HARD below 5 letters, where Ben wins).
  static std::optional<int> default_period(GameMode mode, int k);

  // Throws Unsupported when the pair has no certificate or the solved one
  // fails verification.
  std::shared_ptr<const WeightModel> get(GameMode mode, int k);
  std::shared_ptr<const WeightModel> try_get(GameMode mode, int k) noexcept;

  // Installs a certificate after verifying it against a rebuilt automaton.
  void add(const Certificate& cert);

 private:
  using Key = std::pair<int, int>;
  static Key key_of(GameMode mode, int k);

  LambdaBuildOptions options_;
  std::mutex mutex_;
  std::map<Key, std::shared_ptr<const WeightModel>> models_;
  std::map<Key, std::string> failures_;
};

}  // namespace tg

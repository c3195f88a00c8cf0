#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "cadence/domain.hpp"

namespace cadence {

struct TokenClaims {
  std::string account_id;
  Role role = Role::kPatient;
};

/// Bearer tokens of the form base64url(claims JSON) "." hex(HMAC-SHA256).
class TokenSigner {
 public:
  /// An empty key draws a random one, so tokens die with the process.
  explicit TokenSigner(std::string key = {});

  std::string sign(const TokenClaims& claims) const;
  std::optional<TokenClaims> verify(std::string_view token) const;

 private:
  std::string key_;
};

/// Constant-time comparison for secrets.
bool secrets_equal(std::string_view a, std::string_view b);

}  // namespace cadence

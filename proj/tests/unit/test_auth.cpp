#include <gtest/gtest.h>

#include "cadence/auth.hpp"

using namespace cadence;

TEST(TokenSigner, MatchesReferenceHmac) {
  // Reference value computed with Python's base64 and hmac modules.
  const TokenSigner signer("k");
  EXPECT_EQ(signer.sign({"alice", Role::kPatient}),
            "eyJyb2xlIjoicGF0aWVudCIsInN1YiI6ImFsaWNlIn0."
            "a0ae54a1694b692b66233772b16759d02cd3f819d86cd4d60a3417e6c02aacfa");
}

TEST(TokenSigner, RoundTripsClaims) {
  const TokenSigner signer("secret");
  for (auto role : {Role::kPatient, Role::kFamily, Role::kDoctor}) {
    for (const std::string id : {"a", "ab", "abc", "dr-chen", "\xe6\x9d\x8e"}) {
      const auto claims = signer.verify(signer.sign({id, role}));
      ASSERT_TRUE(claims.has_value()) << id;
      EXPECT_EQ(claims->account_id, id);
      EXPECT_EQ(claims->role, role);
    }
  }
}

TEST(TokenSigner, RejectsTamperingAndForeignKeys) {
  const TokenSigner signer("secret");
  const std::string token = signer.sign({"alice", Role::kPatient});
  EXPECT_FALSE(TokenSigner("other").verify(token));
  EXPECT_FALSE(signer.verify(""));
  EXPECT_FALSE(signer.verify("no-dot"));
  for (std::size_t i = 0; i < token.size(); ++i) {
    std::string bent = token;
    bent[i] = bent[i] == 'A' ? 'B' : 'A';
    EXPECT_FALSE(signer.verify(bent)) << i;
  }
  // A valid signature over a payload without the expected claims.
  const TokenSigner k("k");
  EXPECT_FALSE(k.verify("e30.59e55d56db5ab36030ca80f782abe9b97721df4f1662f7329caa25c52c8743d9"));
}

TEST(TokenSigner, RandomKeysDifferPerInstance) {
  const TokenSigner a, b;
  EXPECT_FALSE(b.verify(a.sign({"alice", Role::kPatient})));
}

TEST(Secrets, ConstantTimeEquality) {
  EXPECT_TRUE(secrets_equal("abc", "abc"));
  EXPECT_FALSE(secrets_equal("abc", "abd"));
  EXPECT_FALSE(secrets_equal("abc", "ab"));
  EXPECT_TRUE(secrets_equal("", ""));
}

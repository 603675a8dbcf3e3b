#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "prov/paillier.hpp"
#include "prov/rng.hpp"

using namespace prov;

namespace {

Keypair toy_keypair() {
  auto entropy = Entropy::seeded(1);
  return keypair_from_primes(11, 13, entropy);
}

}  // namespace

TEST_CASE("toy keypair matches hand arithmetic") {
  const auto kp = toy_keypair();
  CHECK(kp.pub.n == 143);
  CHECK(kp.pub.n_squared == 143 * 143);
  CHECK(kp.priv.lambda == 60);  // lcm(10, 12)
  // Validity: mu * L(g^lambda mod n^2) = 1 (mod n).
  mpz_class gl;
  mpz_powm(gl.get_mpz_t(), kp.pub.g.get_mpz_t(), kp.priv.lambda.get_mpz_t(),
           kp.pub.n_squared.get_mpz_t());
  const mpz_class l = (gl - 1) / kp.pub.n;
  CHECK((l * kp.priv.mu) % kp.pub.n == 1);
}

TEST_CASE("toy key: exhaustive encrypt/decrypt round trip") {
  const auto kp = toy_keypair();
  auto entropy = Entropy::seeded(2);
  for (int m = 0; m < 143; ++m) {
    const auto c = encrypt(kp.pub, m, entropy);
    CHECK(decrypt(kp.priv, kp.pub, c) == m);
  }
}

TEST_CASE("encryption is probabilistic") {
  const auto kp = toy_keypair();
  auto entropy = Entropy::seeded(3);
  const auto a = encrypt(kp.pub, 7, entropy);
  const auto b = encrypt(kp.pub, 7, entropy);
  CHECK(a.value != b.value);
}

TEST_CASE("decrypting the multiplicative identity gives zero") {
  const auto kp = toy_keypair();
  Ciphertext one;
  one.value = 1;
  one.fingerprint = kp.pub.fingerprint;
  CHECK(decrypt(kp.priv, kp.pub, one) == 0);
}

TEST_CASE("plaintext outside the modulus is rejected") {
  const auto kp = toy_keypair();
  auto entropy = Entropy::seeded(4);
  CHECK_THROWS_AS(encrypt(kp.pub, 143, entropy), Error);
  CHECK_THROWS_AS(encrypt(kp.pub, -1, entropy), Error);
}

TEST_CASE("key mismatch is detected") {
  const auto kp = toy_keypair();
  auto entropy = Entropy::seeded(5);
  auto other_entropy = Entropy::seeded(6);
  const auto other = keypair_from_primes(17, 19, other_entropy);
  const auto c = encrypt(kp.pub, 5, entropy);
  CHECK_THROWS_AS(decrypt(other.priv, other.pub, c), Error);
  const auto c2 = encrypt(other.pub, 5, other_entropy);
  CHECK_THROWS_AS(add_ciphertexts(kp.pub, c, c2), Error);
}

TEST_CASE("ciphertext sharing a factor with n is rejected") {
  const auto kp = toy_keypair();
  Ciphertext bad;
  bad.value = 11 * 13;  // = n, shares both factors
  bad.fingerprint = kp.pub.fingerprint;
  CHECK_THROWS_AS(decrypt(kp.priv, kp.pub, bad), Error);
}

TEST_CASE("homomorphic addition on the toy key") {
  const auto kp = toy_keypair();
  auto entropy = Entropy::seeded(7);
  const auto c5 = encrypt(kp.pub, 5, entropy);
  const auto c7 = encrypt(kp.pub, 7, entropy);
  CHECK(decrypt(kp.priv, kp.pub, add_ciphertexts(kp.pub, c5, c7)) == 12);

  // Adding an encryption of zero preserves the message.
  const auto c0 = encrypt(kp.pub, 0, entropy);
  CHECK(decrypt(kp.priv, kp.pub, add_ciphertexts(kp.pub, c5, c0)) == 5);

  // Folding five encryptions of one decrypts to five.
  auto acc = encrypt(kp.pub, 1, entropy);
  for (int i = 1; i < 5; ++i) {
    acc = add_ciphertexts(kp.pub, acc, encrypt(kp.pub, 1, entropy));
  }
  CHECK(decrypt(kp.priv, kp.pub, acc) == 5);

  // Sums reduce modulo n.
  const auto big = encrypt(kp.pub, 100, entropy);
  const auto big2 = encrypt(kp.pub, 100, entropy);
  CHECK(decrypt(kp.priv, kp.pub, add_ciphertexts(kp.pub, big, big2)) == 200 % 143);
}

TEST_CASE("ciphertext exponentiation scales the plaintext") {
  const auto kp = toy_keypair();
  auto entropy = Entropy::seeded(8);
  const auto c = encrypt(kp.pub, 9, entropy);
  Ciphertext powered;
  mpz_powm_ui(powered.value.get_mpz_t(), c.value.get_mpz_t(), 4,
              kp.pub.n_squared.get_mpz_t());
  powered.fingerprint = c.fingerprint;
  CHECK(decrypt(kp.priv, kp.pub, powered) == (9 * 4) % 143);
}

TEST_CASE("random-generator keys behave like the fast generator") {
  auto entropy = Entropy::seeded(9);
  const auto kp = keypair_from_primes(11, 13, entropy, GeneratorMode::random_g);
  CHECK(kp.pub.g != kp.pub.n + 1);
  for (int m : {0, 1, 7, 100, 142}) {
    const auto c = encrypt(kp.pub, m, entropy);
    CHECK(decrypt(kp.priv, kp.pub, c) == m);
  }
}

TEST_CASE("512-bit keygen produces a working key of exact size") {
  auto entropy = Entropy::seeded(10);
  const auto kp = keygen(512, entropy);
  CHECK(kp.pub.key_bits == 512);
  CHECK(mpz_sizeinbase(kp.pub.n.get_mpz_t(), 2) == 512);
  for (int trial = 0; trial < 25; ++trial) {
    const mpz_class m = entropy.below(kp.pub.n);
    const auto c = encrypt(kp.pub, m, entropy);
    CHECK(decrypt(kp.priv, kp.pub, c) == m);
  }
}

TEST_CASE("1024-bit keygen produces an exact-width modulus") {
  auto entropy = Entropy::seeded(11);
  const auto kp = keygen(1024, entropy);
  CHECK(kp.pub.key_bits == 1024);
  const mpz_class m = entropy.below(kp.pub.n);
  const auto c = encrypt(kp.pub, m, entropy);
  CHECK(decrypt(kp.priv, kp.pub, c) == m);
}

TEST_CASE("unsupported key sizes are rejected") {
  auto entropy = Entropy::seeded(12);
  CHECK_THROWS_AS(keygen(100, entropy), Error);
}

TEST_CASE("encryption never shares a factor with n") {
  const auto kp = toy_keypair();
  auto entropy = Entropy::seeded(13);
  for (int m = 0; m < 143; m += 7) {
    const auto c = encrypt(kp.pub, m, entropy);
    mpz_class g;
    mpz_gcd(g.get_mpz_t(), c.value.get_mpz_t(), kp.pub.n.get_mpz_t());
    CHECK(g == 1);
  }
}

TEST_CASE("codec: zero maps to zero both ways") {
  auto entropy = Entropy::seeded(14);
  const auto kp = keygen(128, entropy);
  const FixedPointCodec codec(40, 10, kp.pub.n);
  CHECK(codec.encode(0.0) == 0);
  CHECK(codec.decode(0) == 0.0);
}

TEST_CASE("codec: dyadic rationals round trip exactly") {
  auto entropy = Entropy::seeded(15);
  const auto kp = keygen(128, entropy);
  const FixedPointCodec codec(40, 10, kp.pub.n);
  for (double v : {-1.5, 0.25, 2.75, -1024.0, 0.0009765625}) {
    CHECK(codec.decode(codec.encode(v)) == v);
  }
}

TEST_CASE("codec: near-inverse within half an lsb") {
  auto entropy = Entropy::seeded(16);
  const auto kp = keygen(128, entropy);
  const FixedPointCodec codec(40, 10, kp.pub.n);
  Rng rng(17);
  const double lsb = std::ldexp(1.0, -40);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.uniform(-100.0, 100.0);
    CHECK(std::fabs(codec.decode(codec.encode(v)) - v) <= 0.5 * lsb + 1e-18);
  }
}

TEST_CASE("codec: modular addition realizes real addition") {
  auto entropy = Entropy::seeded(18);
  const auto kp = keygen(128, entropy);
  const FixedPointCodec codec(40, 10, kp.pub.n);
  Rng rng(19);
  const double tol = std::ldexp(1.0, -39);  // 2^(1-f)
  for (int i = 0; i < 10000; ++i) {
    const double a = rng.uniform(-50.0, 50.0);
    const double b = rng.uniform(-50.0, 50.0);
    const mpz_class sum = (codec.encode(a) + codec.encode(b)) % codec.n;
    CHECK(std::fabs(codec.decode(sum) - (a + b)) <= tol);
  }
}

TEST_CASE("codec: out-of-range values raise") {
  const auto kp = toy_keypair();  // tiny modulus: almost nothing fits
  const FixedPointCodec codec(4, 2, kp.pub.n);
  CHECK_THROWS_AS(codec.encode(10.0), Error);
  CHECK_NOTHROW(codec.encode(0.5));
}

TEST_CASE("vector helpers: component semantics and length checks") {
  auto entropy = Entropy::seeded(20);
  const auto kp = keygen(128, entropy);
  const FixedPointCodec codec(40, 10, kp.pub.n);

  // One vector aggregates to itself.
  const std::vector<double> v{1.0, -1.0, 0.5};
  const auto enc = encrypt_vector(kp.pub, codec, v, entropy);
  const auto same = aggregate_vectors(kp.pub, {enc});
  const auto dec = decrypt_vector(kp.priv, kp.pub, codec, same);
  for (std::size_t i = 0; i < v.size(); ++i) {
    CHECK(dec[i] == doctest::Approx(v[i]).epsilon(1e-9));
  }

  // Three copies of the same per-slot values sum per slot.
  const auto agg = aggregate_vectors(kp.pub, {enc, enc, enc});
  const auto sum = decrypt_vector(kp.priv, kp.pub, codec, agg);
  for (std::size_t i = 0; i < v.size(); ++i) {
    CHECK(sum[i] == doctest::Approx(3.0 * v[i]).epsilon(1e-9));
  }

  // Empty input and mismatched lengths.
  CHECK(aggregate_vectors(kp.pub, {}).empty());
  auto short_vec = enc;
  short_vec.pop_back();
  CHECK_THROWS_AS(aggregate_vectors(kp.pub, {enc, short_vec}), Error);
}

TEST_CASE("key json round trip") {
  auto entropy = Entropy::seeded(21);
  const auto kp = keygen(128, entropy);
  const auto pk = public_key_from_json(public_key_to_json(kp.pub));
  CHECK(pk.n == kp.pub.n);
  CHECK(pk.g == kp.pub.g);
  CHECK(pk.n_squared == kp.pub.n_squared);
  CHECK(pk.fingerprint == kp.pub.fingerprint);
  const auto sk = private_key_from_json(private_key_to_json(kp.priv));
  CHECK(sk.lambda == kp.priv.lambda);
  CHECK(sk.mu == kp.priv.mu);
  CHECK(sk.fingerprint == kp.priv.fingerprint);

  // A deserialized pair still decrypts.
  const auto c = encrypt(pk, 42, entropy);
  CHECK(decrypt(sk, pk, c) == 42);
}

TEST_CASE("private key json carries no public modulus field") {
  const auto kp = toy_keypair();
  const auto text = private_key_to_json(kp.priv);
  CHECK(text.find("\"lambda\"") != std::string::npos);
  CHECK(text.find("\"mu\"") != std::string::npos);
  CHECK(text.find("\"n\"") == std::string::npos);
}

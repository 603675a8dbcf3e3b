#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "prov/errors.hpp"

namespace prov {

// Additively homomorphic public-key encryption over Z_n with ciphertexts
// in Z*_{n^2}: multiplying ciphertexts adds plaintexts, which lets an
// aggregation server sum encrypted model updates without decrypting them.
// Real-valued updates ride on a fixed-point encoding into Z_n.

// Entropy for primes and encryption randomizers. The OS-seeded source is
// the default; the fixed-seed constructor exists for reproducible tests
// and must not be used for real key material.
class Entropy {
 public:
  static Entropy os();
  static Entropy seeded(std::uint64_t seed);

  Entropy(Entropy&&) noexcept = default;
  Entropy& operator=(Entropy&&) noexcept = default;

  // Uniform in [0, 2^bits).
  mpz_class random_bits(unsigned bits);
  // Uniform in [0, bound).
  mpz_class below(const mpz_class& bound);

 private:
  Entropy();
  std::unique_ptr<gmp_randclass> state_;
};

struct PublicKey {
  mpz_class n;
  mpz_class g;
  mpz_class n_squared;
  int key_bits = 0;
  std::string fingerprint;  // hash of n, used to pair ciphertexts with keys
};

struct PrivateKey {
  mpz_class lambda;  // lcm(p-1, q-1)
  mpz_class mu;      // (L(g^lambda mod n^2))^-1 mod n
  mpz_class p, q;
  std::string fingerprint;
};

struct Keypair {
  PublicKey pub;
  PrivateKey priv;
};

struct Ciphertext {
  mpz_class value;  // in Z*_{n^2}
  std::string fingerprint;
};

enum class GeneratorMode {
  random_g,    // random g in Z*_{n^2} passing the validity check
  n_plus_one,  // g = n + 1 (fast; L(g^lambda) has a closed form)
};

std::string key_fingerprint(const mpz_class& n);

// key_bits in {128 (test-only), 512, 1024, 2048}.
Keypair keygen(int key_bits, Entropy& entropy,
               GeneratorMode mode = GeneratorMode::random_g);

// Builds a keypair from caller-supplied primes; used for toy test vectors.
Keypair keypair_from_primes(const mpz_class& p, const mpz_class& q,
                            Entropy& entropy,
                            GeneratorMode mode = GeneratorMode::n_plus_one);

// c = g^m * r^n mod n^2 with fresh r in Z*_n. Requires 0 <= m < n.
Ciphertext encrypt(const PublicKey& pk, const mpz_class& m, Entropy& entropy);

// m = L(c^lambda mod n^2) * mu mod n, with L(x) = (x - 1) / n.
mpz_class decrypt(const PrivateKey& sk, const PublicKey& pk, const Ciphertext& c);

// Dec(result) = (m1 + m2) mod n.
Ciphertext add_ciphertexts(const PublicKey& pk, const Ciphertext& a,
                           const Ciphertext& b);

// Fixed-point encoding of reals into Z_n: m = round(v * 2^frac_bits), with
// negatives mapped to the upper half of Z_n. max_addends reserves headroom
// so that up to that many encodings can be summed without wrapping.
struct FixedPointCodec {
  int frac_bits = 40;
  int max_addends = 10;
  mpz_class n;

  FixedPointCodec(int frac_bits, int max_addends, mpz_class modulus);

  mpz_class encode(double v) const;  // raises Errc::overflow out of range
  double decode(const mpz_class& m) const;
  // Largest encodable magnitude.
  double max_value() const;
};

std::vector<Ciphertext> encrypt_vector(const PublicKey& pk,
                                       const FixedPointCodec& codec,
                                       const std::vector<double>& values,
                                       Entropy& entropy);

std::vector<double> decrypt_vector(const PrivateKey& sk, const PublicKey& pk,
                                   const FixedPointCodec& codec,
                                   const std::vector<Ciphertext>& cts);

// Componentwise homomorphic sum of equally sized ciphertext vectors.
std::vector<Ciphertext> aggregate_vectors(
    const PublicKey& pk, const std::vector<std::vector<Ciphertext>>& vectors);

std::string public_key_to_json(const PublicKey& pk);
PublicKey public_key_from_json(const std::string& text);
std::string private_key_to_json(const PrivateKey& sk);
PrivateKey private_key_from_json(const std::string& text);

}  // namespace prov

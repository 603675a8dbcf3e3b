#include "prov/paillier.hpp"

#include <cmath>
#include <random>

#include <json.hpp>

namespace prov {

using nlohmann::json;

namespace {

constexpr int kPrimalityReps = 40;  // error < 4^-40

mpz_class L(const mpz_class& x, const mpz_class& n) {
  return (x - 1) / n;
}

mpz_class powm(const mpz_class& base, const mpz_class& exp, const mpz_class& mod) {
  mpz_class r;
  mpz_powm(r.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(), mod.get_mpz_t());
  return r;
}

mpz_class gcd(const mpz_class& a, const mpz_class& b) {
  mpz_class r;
  mpz_gcd(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return r;
}

mpz_class lcm(const mpz_class& a, const mpz_class& b) {
  mpz_class r;
  mpz_lcm(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return r;
}

bool invert(const mpz_class& a, const mpz_class& mod, mpz_class& out) {
  return mpz_invert(out.get_mpz_t(), a.get_mpz_t(), mod.get_mpz_t()) != 0;
}

mpz_class random_prime(unsigned bits, Entropy& entropy) {
  // Top two bits set so the product of two such primes has exactly
  // 2*bits bits.
  mpz_class top = (mpz_class(3) << (bits - 2));
  for (int attempt = 0; attempt < 100000; ++attempt) {
    mpz_class candidate = entropy.random_bits(bits - 2) | top;
    mpz_setbit(candidate.get_mpz_t(), 0);  // odd
    if (mpz_probab_prime_p(candidate.get_mpz_t(), kPrimalityReps) > 0) {
      return candidate;
    }
  }
  raise(Errc::primality_timeout, "no prime found in attempt budget");
}

// Completes a keypair given n-related values and a generator mode.
Keypair finish_keypair(const mpz_class& p, const mpz_class& q, Entropy& entropy,
                       GeneratorMode mode) {
  Keypair kp;
  kp.pub.n = p * q;
  kp.pub.n_squared = kp.pub.n * kp.pub.n;
  kp.pub.key_bits = static_cast<int>(mpz_sizeinbase(kp.pub.n.get_mpz_t(), 2));
  kp.priv.lambda = lcm(p - 1, q - 1);
  kp.priv.p = p;
  kp.priv.q = q;

  const mpz_class& n = kp.pub.n;
  const mpz_class& n2 = kp.pub.n_squared;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    mpz_class g = (mode == GeneratorMode::n_plus_one) ? n + 1
                                                      : entropy.below(n2);
    if (g <= 1 || gcd(g, n2) != 1) continue;
    const mpz_class l = L(powm(g, kp.priv.lambda, n2), n);
    if (gcd(l, n) != 1) {
      if (mode == GeneratorMode::n_plus_one) break;  // cannot retry a fixed g
      continue;
    }
    mpz_class mu;
    if (!invert(l, n, mu)) continue;
    kp.pub.g = g;
    kp.priv.mu = mu;
    kp.pub.fingerprint = key_fingerprint(n);
    kp.priv.fingerprint = kp.pub.fingerprint;
    return kp;
  }
  raise(Errc::entropy_failure, "no valid generator found");
}

}  // namespace

Entropy::Entropy() : state_(std::make_unique<gmp_randclass>(gmp_randinit_mt)) {}

Entropy Entropy::os() {
  Entropy e;
  std::random_device rd;
  mpz_class seed = 0;
  for (int i = 0; i < 8; ++i) {
    seed <<= 32;
    seed |= mpz_class(rd());
  }
  e.state_->seed(seed);
  return e;
}

Entropy Entropy::seeded(std::uint64_t seed) {
  Entropy e;
  mpz_class s;
  mpz_import(s.get_mpz_t(), 1, 1, sizeof(seed), 0, 0, &seed);
  e.state_->seed(s);
  return e;
}

mpz_class Entropy::random_bits(unsigned bits) { return state_->get_z_bits(bits); }

mpz_class Entropy::below(const mpz_class& bound) {
  if (bound <= 0) raise(Errc::bad_value, "entropy bound must be positive");
  return state_->get_z_range(bound);
}

std::string key_fingerprint(const mpz_class& n) {
  // FNV-1a over the decimal representation; a pairing check, not a MAC.
  const std::string dec = n.get_str();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : dec) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Keypair keygen(int key_bits, Entropy& entropy, GeneratorMode mode) {
  if (key_bits != 128 && key_bits != 512 && key_bits != 1024 && key_bits != 2048) {
    raise(Errc::bad_value, "key_bits must be one of 128 (test-only), 512, 1024, 2048");
  }
  const unsigned prime_bits = static_cast<unsigned>(key_bits) / 2;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    mpz_class p = random_prime(prime_bits, entropy);
    mpz_class q = random_prime(prime_bits, entropy);
    if (p == q) continue;
    if (gcd(p * q, (p - 1) * (q - 1)) != 1) continue;
    Keypair kp = finish_keypair(p, q, entropy, mode);
    if (kp.pub.key_bits != key_bits) continue;
    return kp;
  }
  raise(Errc::primality_timeout, "keygen attempt budget exhausted");
}

Keypair keypair_from_primes(const mpz_class& p, const mpz_class& q,
                            Entropy& entropy, GeneratorMode mode) {
  if (mpz_probab_prime_p(p.get_mpz_t(), kPrimalityReps) == 0 ||
      mpz_probab_prime_p(q.get_mpz_t(), kPrimalityReps) == 0) {
    raise(Errc::bad_value, "keypair_from_primes: arguments must be prime");
  }
  if (p == q) raise(Errc::bad_value, "keypair_from_primes: primes must differ");
  if (gcd(p * q, (p - 1) * (q - 1)) != 1) {
    raise(Errc::bad_value, "keypair_from_primes: gcd(pq, (p-1)(q-1)) != 1");
  }
  return finish_keypair(p, q, entropy, mode);
}

Ciphertext encrypt(const PublicKey& pk, const mpz_class& m, Entropy& entropy) {
  if (m < 0 || m >= pk.n) {
    raise(Errc::out_of_range, "plaintext must be in [0, n)");
  }
  mpz_class r;
  do {
    r = entropy.below(pk.n);
  } while (r == 0 || gcd(r, pk.n) != 1);
  const mpz_class gm = powm(pk.g, m, pk.n_squared);
  const mpz_class rn = powm(r, pk.n, pk.n_squared);
  Ciphertext c;
  c.value = (gm * rn) % pk.n_squared;
  c.fingerprint = pk.fingerprint;
  return c;
}

mpz_class decrypt(const PrivateKey& sk, const PublicKey& pk, const Ciphertext& c) {
  if (c.fingerprint != pk.fingerprint || sk.fingerprint != pk.fingerprint) {
    raise(Errc::key_mismatch, "ciphertext was produced under a different key");
  }
  if (c.value <= 0 || c.value >= pk.n_squared || gcd(c.value, pk.n_squared) != 1) {
    raise(Errc::invalid_ciphertext, "ciphertext is not in Z*_{n^2}");
  }
  return (L(powm(c.value, sk.lambda, pk.n_squared), pk.n) * sk.mu) % pk.n;
}

Ciphertext add_ciphertexts(const PublicKey& pk, const Ciphertext& a,
                           const Ciphertext& b) {
  if (a.fingerprint != pk.fingerprint || b.fingerprint != pk.fingerprint) {
    raise(Errc::key_mismatch, "ciphertexts under different keys");
  }
  Ciphertext c;
  c.value = (a.value * b.value) % pk.n_squared;
  c.fingerprint = pk.fingerprint;
  return c;
}

FixedPointCodec::FixedPointCodec(int frac_bits_, int max_addends_, mpz_class modulus)
    : frac_bits(frac_bits_), max_addends(max_addends_), n(std::move(modulus)) {
  if (frac_bits < 1) raise(Errc::bad_value, "frac_bits must be >= 1");
  if (max_addends < 1) raise(Errc::bad_value, "max_addends must be >= 1");
  if (n <= 0) raise(Errc::bad_value, "codec modulus must be positive");
}

double FixedPointCodec::max_value() const {
  // |v| < n / 2^(frac_bits+1) / max_addends
  mpz_class limit = n >> (frac_bits + 1);
  limit /= max_addends;
  return mpz_get_d(limit.get_mpz_t()) * 0.999;  // stay strictly inside
}

mpz_class FixedPointCodec::encode(double v) const {
  if (!std::isfinite(v)) raise(Errc::bad_value, "cannot encode non-finite value");
  // Exact scaling: v = mant * 2^exp with a 53-bit integer mantissa, so
  // v * 2^f is either an exact shift or a round-half-away drop of low bits.
  int exp = 0;
  const double mant_d = std::frexp(v, &exp);              // |mant_d| in [0.5, 1)
  const auto mant = static_cast<long long>(std::ldexp(mant_d, 53));  // exact
  exp -= 53;
  mpz_class m(static_cast<long>(mant));
  const int shift = exp + frac_bits;
  if (shift >= 0) {
    m <<= shift;
  } else {
    const mpz_class half = mpz_class(1) << (-shift - 1);
    const bool negative = m < 0;
    mpz_class mag = abs(m) + half;
    mag >>= -shift;
    m = negative ? -mag : mag;
  }
  mpz_class bound = n >> 1;
  bound /= max_addends;
  if (abs(m) >= bound) {
    raise(Errc::overflow, "value exceeds the encodable range");
  }
  if (m < 0) m += n;
  return m;
}

double FixedPointCodec::decode(const mpz_class& m) const {
  if (m < 0 || m >= n) raise(Errc::out_of_range, "encoded value outside Z_n");
  mpz_class s = m;
  if (s > n / 2) s -= n;
  return std::ldexp(mpz_get_d(s.get_mpz_t()), -frac_bits);
}

std::vector<Ciphertext> encrypt_vector(const PublicKey& pk,
                                       const FixedPointCodec& codec,
                                       const std::vector<double>& values,
                                       Entropy& entropy) {
  std::vector<Ciphertext> out;
  out.reserve(values.size());
  for (double v : values) {
    out.push_back(encrypt(pk, codec.encode(v), entropy));
  }
  return out;
}

std::vector<double> decrypt_vector(const PrivateKey& sk, const PublicKey& pk,
                                   const FixedPointCodec& codec,
                                   const std::vector<Ciphertext>& cts) {
  std::vector<double> out;
  out.reserve(cts.size());
  for (const auto& c : cts) {
    out.push_back(codec.decode(decrypt(sk, pk, c)));
  }
  return out;
}

std::vector<Ciphertext> aggregate_vectors(
    const PublicKey& pk, const std::vector<std::vector<Ciphertext>>& vectors) {
  if (vectors.empty()) return {};
  const std::size_t len = vectors.front().size();
  for (const auto& v : vectors) {
    if (v.size() != len) {
      raise(Errc::length_mismatch, "aggregate_vectors: vector lengths differ");
    }
  }
  std::vector<Ciphertext> acc = vectors.front();
  for (std::size_t k = 1; k < vectors.size(); ++k) {
    for (std::size_t i = 0; i < len; ++i) {
      acc[i] = add_ciphertexts(pk, acc[i], vectors[k][i]);
    }
  }
  return acc;
}

std::string public_key_to_json(const PublicKey& pk) {
  json doc;
  doc["n"] = pk.n.get_str();
  doc["g"] = pk.g.get_str();
  return doc.dump(2);
}

PublicKey public_key_from_json(const std::string& text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    raise(Errc::malformed_json, "public key file is not a JSON object");
  }
  PublicKey pk;
  pk.n = mpz_class(doc.at("n").get<std::string>());
  pk.g = mpz_class(doc.at("g").get<std::string>());
  pk.n_squared = pk.n * pk.n;
  pk.key_bits = static_cast<int>(mpz_sizeinbase(pk.n.get_mpz_t(), 2));
  pk.fingerprint = key_fingerprint(pk.n);
  return pk;
}

std::string private_key_to_json(const PrivateKey& sk) {
  json doc;
  doc["lambda"] = sk.lambda.get_str();
  doc["mu"] = sk.mu.get_str();
  doc["p"] = sk.p.get_str();
  doc["q"] = sk.q.get_str();
  return doc.dump(2);
}

PrivateKey private_key_from_json(const std::string& text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    raise(Errc::malformed_json, "private key file is not a JSON object");
  }
  PrivateKey sk;
  sk.lambda = mpz_class(doc.at("lambda").get<std::string>());
  sk.mu = mpz_class(doc.at("mu").get<std::string>());
  sk.p = mpz_class(doc.at("p").get<std::string>());
  sk.q = mpz_class(doc.at("q").get<std::string>());
  sk.fingerprint = key_fingerprint(sk.p * sk.q);
  return sk;
}

}  // namespace prov

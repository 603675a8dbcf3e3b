#include <benchmark/benchmark.h>

#include "prov/paillier.hpp"

namespace {

const prov::Keypair& keypair(int bits) {
  static auto entropy = prov::Entropy::seeded(7);
  static const prov::Keypair kp512 = prov::keygen(512, entropy);
  static const prov::Keypair kp1024 = prov::keygen(1024, entropy);
  return bits == 512 ? kp512 : kp1024;
}

void BM_Encrypt(benchmark::State& state) {
  const auto& kp = keypair(static_cast<int>(state.range(0)));
  auto entropy = prov::Entropy::seeded(11);
  const mpz_class m = entropy.below(kp.pub.n);
  for (auto _ : state) {
    auto c = prov::encrypt(kp.pub, m, entropy);
    benchmark::DoNotOptimize(c);
  }
}
BENCHMARK(BM_Encrypt)->Arg(512)->Arg(1024)->Unit(benchmark::kMicrosecond);

void BM_Decrypt(benchmark::State& state) {
  const auto& kp = keypair(static_cast<int>(state.range(0)));
  auto entropy = prov::Entropy::seeded(13);
  const auto c = prov::encrypt(kp.pub, entropy.below(kp.pub.n), entropy);
  for (auto _ : state) {
    auto m = prov::decrypt(kp.priv, kp.pub, c);
    benchmark::DoNotOptimize(m);
  }
}
BENCHMARK(BM_Decrypt)->Arg(512)->Arg(1024)->Unit(benchmark::kMicrosecond);

void BM_AddCiphertexts(benchmark::State& state) {
  const auto& kp = keypair(static_cast<int>(state.range(0)));
  auto entropy = prov::Entropy::seeded(17);
  const auto a = prov::encrypt(kp.pub, 123, entropy);
  const auto b = prov::encrypt(kp.pub, 456, entropy);
  for (auto _ : state) {
    auto c = prov::add_ciphertexts(kp.pub, a, b);
    benchmark::DoNotOptimize(c);
  }
}
BENCHMARK(BM_AddCiphertexts)->Arg(512)->Arg(1024)->Unit(benchmark::kMicrosecond);

void BM_EncryptVector(benchmark::State& state) {
  const auto& kp = keypair(512);
  auto entropy = prov::Entropy::seeded(19);
  const prov::FixedPointCodec codec(40, 10, kp.pub.n);
  std::vector<double> values(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = 0.001 * static_cast<double>(i % 100) - 0.05;
  }
  for (auto _ : state) {
    auto cts = prov::encrypt_vector(kp.pub, codec, values, entropy);
    benchmark::DoNotOptimize(cts);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EncryptVector)->Arg(176)->Unit(benchmark::kMillisecond);

}  // namespace

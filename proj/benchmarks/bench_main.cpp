#include <benchmark/benchmark.h>

#include <array>

#include "onionkep/nikep.hpp"
#include "onionkep/onioncrypt.hpp"
#include "onionkep/simnet.hpp"

namespace {

using namespace onionkep;
using modmath::Natural;

const nikep::SystemParams& params_for(benchmark::State& state) {
  return nikep::reference_params(static_cast<std::size_t>(state.range(0)));
}

void BM_ModPow(benchmark::State& state) {
  const auto& params = params_for(state);
  modmath::SeededRandom rng(1);
  const Natural base = rng.below(params.n);
  const Natural exp = rng.below(params.phi);
  for (auto _ : state) benchmark::DoNotOptimize(modmath::mod_pow(base, exp, params.n));
}
BENCHMARK(BM_ModPow)->Arg(1024)->Arg(2048);

void BM_KeyPair(benchmark::State& state) {
  const auto& params = params_for(state);
  modmath::SeededRandom rng(2);
  for (auto _ : state) benchmark::DoNotOptimize(nikep::gen_keypair(params, rng));
}
BENCHMARK(BM_KeyPair)->Arg(1024)->Arg(2048);

// One full exchange: both mixes, both strips, both reductions.
void BM_Handshake(benchmark::State& state) {
  const auto& params = params_for(state);
  modmath::SeededRandom rng(3);
  const auto alice = nikep::gen_keypair(params, rng);
  const auto bob = nikep::gen_keypair(params, rng);
  for (auto _ : state) {
    const auto to_bob = nikep::mix(params, bob.pub, alice.priv);
    const auto to_alice = nikep::mix(params, alice.pub, bob.priv);
    benchmark::DoNotOptimize(nikep::reduce(params, nikep::strip(params, to_bob, bob.priv.mask)));
    benchmark::DoNotOptimize(nikep::reduce(params, nikep::strip(params, to_alice, alice.priv.mask)));
  }
}
BENCHMARK(BM_Handshake)->Arg(1024)->Arg(2048);

nikep::SessionKey session_for(const nikep::SystemParams& params, std::uint64_t seed) {
  modmath::SeededRandom rng(seed);
  const auto a = nikep::gen_keypair(params, rng);
  const auto b = nikep::gen_keypair(params, rng);
  return nikep::reduce(params, nikep::strip(params, nikep::mix(params, b.pub, a.priv), b.priv.mask));
}

void BM_ChunkEncrypt(benchmark::State& state) {
  const auto& params = nikep::reference_params(1024);
  const auto key = session_for(params, 4);
  const Bytes plain(static_cast<std::size_t>(state.range(0)), 0x5a);
  for (auto _ : state) benchmark::DoNotOptimize(onioncrypt::chunk_encrypt(plain, key, params));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_ChunkEncrypt)->Arg(64)->Arg(4096);

void BM_OnionWrapThreeHops(benchmark::State& state) {
  const auto& params = nikep::reference_params(1024);
  const std::array<nikep::SessionKey, 3> keys{session_for(params, 5), session_for(params, 6),
                                              session_for(params, 7)};
  const Bytes plain(static_cast<std::size_t>(state.range(0)), 0xa5);
  for (auto _ : state) benchmark::DoNotOptimize(onioncrypt::onion_wrap(plain, keys, params));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_OnionWrapThreeHops)->Arg(64)->Arg(4096);

void BM_SimnetBuild(benchmark::State& state) {
  net::SimConfig config;
  config.params = nikep::reference_params(static_cast<std::size_t>(state.range(0)));
  config.seed = 8;
  config.relays = {{"B", std::nullopt}, {"C", std::nullopt}, {"D", std::nullopt}};
  const std::vector<net::ScriptEvent> script{net::BuildCircuit{1, {"B", "C", "D"}}};
  for (auto _ : state) benchmark::DoNotOptimize(net::simnet_run(config, script));
}
BENCHMARK(BM_SimnetBuild)->Arg(1024)->Arg(2048)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

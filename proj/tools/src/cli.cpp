#include "cli.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <iomanip>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>

#include "onionkep/bytes.hpp"
#include "onionkep/directory.hpp"
#include "onionkep/error.hpp"
#include "onionkep/keyfile.hpp"
#include "onionkep/modmath.hpp"
#include "onionkep/nikep.hpp"
#include "onionkep/onioncrypt.hpp"
#include "onionkep/protocol.hpp"
#include "onionkep/runtime.hpp"
#include "onionkep/simnet.hpp"

namespace onionkep::cli {
namespace {

using modmath::Natural;
using nikep::SystemParams;

constexpr std::uint32_t kCircuitId = 1;
constexpr std::uint16_t kStreamId = 1;
constexpr std::size_t kDefaultSimBits = 64;

struct Options {
  // keygen
  std::size_t r_bits = 0;
  std::string out_path;
  bool allow_small_k = false;
  // shared
  std::uint64_t seed = 0;
  std::string params_file;
  std::string directory;
  std::string listen = "127.0.0.1:0";
  // directory
  std::string snapshot;
  // node
  std::string name;
  std::string key_file;
  std::string advertise;
  bool no_echo = false;
  // client / sim
  std::string hops = "B,C,D";
  std::string relays = "B,C,D";
  bool sim = false;
  bool corrupt_created = false;
  std::string message = "hello";
  // demo / bench
  bool mitigated = false;
  std::size_t n_bits = 1024;
};

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedSessionKey:
    case ErrorCode::MalformedPayload:
    case ErrorCode::UnknownCommand:
    case ErrorCode::TruncatedCell:
    case ErrorCode::UnknownSubcommand:
    case ErrorCode::TruncatedFrame:
    case ErrorCode::NotReady:
    case ErrorCode::CircuitIntegrityFailure:
    case ErrorCode::UnknownCircuit:
    case ErrorCode::CircuitDestroyed:
    case ErrorCode::StepBudgetExceeded:
    case ErrorCode::FrameTooLarge:
    case ErrorCode::ConnectionLost:
      return kExitProtocol;
    default:
      return kExitUsage;
  }
}

std::string hex(const Natural& v) { return v.get_str(16); }

std::string printable(ByteView data) {
  std::string text;
  for (std::uint8_t b : data) text.push_back(b >= 0x20 && b < 0x7f ? static_cast<char>(b) : '.');
  return text;
}

std::vector<std::string> split_hops(const std::string& text) {
  std::vector<std::string> hops;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    if (item.empty()) throw Error(ErrorCode::InvalidArgument, "empty hop name in --hops");
    hops.push_back(item);
  }
  if (hops.empty()) throw Error(ErrorCode::InvalidArgument, "--hops names no relays");
  return hops;
}

std::uint64_t seed_or_random(const CLI::Option* seed_opt, std::uint64_t seed) {
  if (seed_opt->count() > 0) return seed;
  std::random_device device;
  return (static_cast<std::uint64_t>(device()) << 32) ^ device();
}

SystemParams params_from_file(const std::string& path) {
  if (path.empty()) throw Error(ErrorCode::InvalidArgument, "--params is required");
  return nikep::decode_key_file(nikep::read_file(path)).params;
}

net::Endpoint directory_endpoint(const std::string& flag) {
  if (!flag.empty()) return net::parse_endpoint(flag);
  if (const char* env = std::getenv("ONIONKEP_DIR"); env != nullptr && *env != '\0') {
    return net::parse_endpoint(env);
  }
  throw Error(ErrorCode::InvalidArgument, "no directory: pass --directory or set ONIONKEP_DIR");
}

// Must run before any thread starts so every thread inherits the mask.
sigset_t block_stop_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  return set;
}

void wait_for_stop(const sigset_t& set) {
  int sig = 0;
  sigwait(&set, &sig);
}

void print_sizes(std::ostream& out, const SystemParams& params) {
  const auto sizes = nikep::key_sizes(params);
  out << "public_bytes=" << sizes.public_bytes << '\n'
      << "private_bytes=" << sizes.private_bytes << '\n';
}

int cmd_keygen(const Options& o, const CLI::Option* seed_opt, const CLI::Option* bits_opt,
               std::ostream& out) {
  modmath::SeededRandom rng(seed_or_random(seed_opt, o.seed));
  SystemParams params;
  if (!o.params_file.empty()) {
    params = params_from_file(o.params_file);
  } else if (bits_opt->count() > 0) {
    params = nikep::gen_params(o.r_bits, rng);
  } else {
    throw Error(ErrorCode::InvalidArgument, "--r-bits or --params is required");
  }
  const auto keys = nikep::gen_keypair(params, rng, {.prefix_safe = !o.allow_small_k});

  const std::string pub_path = o.out_path + ".pub";
  const std::string key_path = o.out_path + ".key";
  nikep::write_file(pub_path, nikep::encode_public_key(params, keys.pub));
  nikep::write_file(key_path, nikep::encode_private_key(params, keys));

  out << "r_bits=" << modmath::bit_length(params.r) << '\n'
      << "n_bits=" << modmath::bit_length(params.n) << '\n'
      << "p=" << hex(params.p) << '\n'
      << "q=" << hex(params.q) << '\n'
      << "r=" << hex(params.r) << '\n'
      << "n=" << hex(params.n) << '\n'
      << "P=" << hex(keys.pub.p_part) << '\n'
      << "Q=" << hex(keys.pub.q_part) << '\n';
  print_sizes(out, params);
  out << "public_file=" << pub_path << '\n' << "private_file=" << key_path << '\n';
  return kExitOk;
}

int cmd_directory(const Options& o, std::ostream& out) {
  const auto params = params_from_file(o.params_file);
  const sigset_t stop = block_stop_signals();
  std::optional<std::filesystem::path> snapshot;
  if (!o.snapshot.empty()) snapshot = o.snapshot;
  net::Directory directory(params, snapshot);
  net::DirectoryServer server(directory, net::parse_endpoint(o.listen));
  server.start();
  out << "directory=" << server.endpoint().to_string() << std::endl;
  wait_for_stop(stop);
  server.stop();
  out << "stopped=directory" << std::endl;
  return kExitOk;
}

int cmd_node(const Options& o, std::ostream& out) {
  if (o.name.empty()) throw Error(ErrorCode::InvalidArgument, "--name is required");
  const auto file = nikep::decode_key_file(nikep::read_file(o.key_file));
  if (!file.priv) throw Error(ErrorCode::InvalidArgument, "--key must be a private key file");

  net::NodeServerConfig config;
  config.name = o.name;
  config.params = file.params;
  config.keys = {file.pub, *file.priv};
  config.listen = net::parse_endpoint(o.listen);
  config.directory = directory_endpoint(o.directory);
  config.advertise = o.advertise;
  config.exit_echo = !o.no_echo;

  const sigset_t stop = block_stop_signals();
  net::NodeServer server(config);
  std::mutex out_mutex;
  server.on_delivery([&](const net::Delivery& d) {
    std::lock_guard lock(out_mutex);
    out << "delivery node=" << d.node << " circ=" << d.circ_id << " stream=" << d.stream_id
        << " bytes=" << d.data.size() << " text=" << printable(d.data) << std::endl;
  });
  server.start();
  {
    std::lock_guard lock(out_mutex);
    out << "node=" << o.name << " address=" << server.endpoint().to_string() << std::endl;
  }
  wait_for_stop(stop);
  server.stop();
  std::lock_guard lock(out_mutex);
  out << "stopped=" << o.name << std::endl;
  return kExitOk;
}

int report_circuit(const protocol::CircuitState& circuit, std::ostream& out) {
  for (const auto& hop : circuit.hops) {
    if (hop.confirmed && hop.session) {
      const auto digest = onioncrypt::key_digest(*hop.session);
      out << "hop=" << hop.node_name << " status=confirmed digest="
          << to_hex(ByteView(digest).first(4)) << '\n';
    } else {
      out << "hop=" << hop.node_name << " status=unconfirmed\n";
    }
  }
  if (circuit.phase == protocol::Phase::Ready) {
    out << "circuit=ready\n";
    return kExitOk;
  }
  out << "circuit=failed reason="
      << to_string(circuit.failure.value_or(ErrorCode::CircuitDestroyed)) << '\n';
  return kExitProtocol;
}

net::SimResult run_sim(const Options& o, std::uint64_t seed, std::size_t r_bits, bool send) {
  modmath::SeededRandom param_rng(seed);
  net::SimConfig config;
  config.params = nikep::gen_params(r_bits, param_rng);
  config.seed = seed;
  const auto hops = split_hops(o.hops);
  for (const auto& name : split_hops(o.relays)) config.relays.push_back({name, std::nullopt});

  std::vector<net::ScriptEvent> script;
  if (o.corrupt_created) {
    script.push_back(net::TamperCell{hops.front(), config.client_name,
                                     onioncrypt::CellCommand::Created, 0, 0, 0x01});
  }
  script.push_back(net::BuildCircuit{kCircuitId, hops});
  if (send) script.push_back(net::SendData{kCircuitId, kStreamId, to_bytes(o.message)});
  return net::simnet_run(config, script);
}

int cmd_client(const Options& o, bool send, const CLI::Option* seed_opt,
               const CLI::Option* bits_opt, std::ostream& out) {
  const std::uint64_t seed = seed_or_random(seed_opt, o.seed);
  if (o.sim) {
    const std::size_t r_bits = bits_opt->count() > 0 ? o.r_bits : kDefaultSimBits;
    const auto result = run_sim(o, seed, r_bits, send);
    const int code = report_circuit(result.circuits.at(kCircuitId), out);
    if (code != kExitOk || !send) return code;
    for (const auto& d : result.exit_deliveries) {
      out << "exit_delivery node=" << d.node << " text=" << printable(d.data) << '\n';
    }
    for (const auto& d : result.client_deliveries) out << "response=" << printable(d.data) << '\n';
    return kExitOk;
  }

  modmath::SeededRandom rng(seed);
  net::StreamClientConfig config;
  config.params = params_from_file(o.params_file);
  config.directory = directory_endpoint(o.directory);
  config.corrupt_created = o.corrupt_created;
  net::StreamClient client(config, rng);
  const int code = report_circuit(client.build(kCircuitId, split_hops(o.hops)), out);
  if (code == kExitOk && send) {
    out << "response=" << printable(client.round_trip(kStreamId, to_bytes(o.message))) << '\n';
  }
  client.close();
  return code;
}

// Toy captures: w = 36 is the shared secret of the worked example, k_m = 9.
struct Captures {
  SystemParams params;
  Natural c1;
  Natural c2;
  Natural k_n;
};

Natural small_unit(const SystemParams& params, modmath::RandomSource& rng) {
  for (;;) {
    Natural k = rng.between(2, params.r - 1);
    if (gcd(k, params.n) == 1) return k;
  }
}

Captures make_captures(const Options& o, const CLI::Option* seed_opt, const CLI::Option* bits_opt) {
  const bool toy_bits = bits_opt->count() == 0 || o.r_bits == 4;
  if (toy_bits && seed_opt->count() == 0) {
    Captures toy{SystemParams::from_primes(2, 2, 11), 0, 0, o.mitigated ? 13 : 7};
    toy.c1 = Natural(36 * 9) % toy.params.n;
    toy.c2 = toy.c1 * toy.k_n % toy.params.n;
    return toy;
  }
  modmath::SeededRandom rng(seed_or_random(seed_opt, o.seed));
  Captures cap;
  cap.params = toy_bits ? SystemParams::from_primes(2, 2, 11) : nikep::gen_params(o.r_bits, rng);
  const auto a = nikep::gen_keypair(cap.params, rng);
  const auto b = nikep::gen_keypair(cap.params, rng);
  const Natural shared = nikep::strip(cap.params, nikep::mix(cap.params, b.pub, a.priv), b.priv.mask);
  const Natural k_m = nikep::gen_keypair(cap.params, rng).priv.mask;
  cap.k_n = o.mitigated ? nikep::gen_keypair(cap.params, rng, {.prefix_safe = true}).priv.mask
                        : small_unit(cap.params, rng);
  cap.c1 = shared * k_m % cap.params.n;
  cap.c2 = cap.c1 * cap.k_n % cap.params.n;
  return cap;
}

int cmd_demo_prefix(const Options& o, const CLI::Option* seed_opt, const CLI::Option* bits_opt,
                    std::ostream& out) {
  const Captures cap = make_captures(o, seed_opt, bits_opt);
  const Natural recovered = nikep::prefix_recover(cap.params, cap.c1, cap.c2);
  const Natural residue = cap.k_n % cap.params.r;
  out << "mode=" << (o.mitigated ? "mitigated" : "unmitigated") << '\n'
      << "r=" << cap.params.r.get_str() << '\n'
      << "n=" << cap.params.n.get_str() << '\n'
      << "capture1=" << cap.c1.get_str() << '\n'
      << "capture2=" << cap.c2.get_str() << '\n'
      << "true_k=" << cap.k_n.get_str() << '\n'
      << "true_k_mod_r=" << residue.get_str() << '\n'
      << "recovered=" << recovered.get_str() << '\n';
  if (!o.mitigated) {
    const bool ok = recovered == cap.k_n;
    out << "outcome=" << (ok ? "key_recovered" : "key_not_recovered") << '\n';
    return ok ? kExitOk : kExitProtocol;
  }
  const bool ok = recovered != cap.k_n && recovered == residue;
  out << "outcome=" << (ok ? "only_residue_recovered" : "unexpected") << '\n';
  return ok ? kExitOk : kExitProtocol;
}

std::string kilobytes(std::size_t bytes) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(3) << static_cast<double>(bytes) / 1000.0;
  return s.str();
}

int cmd_bench_keysizes(const Options& o, std::ostream& out) {
  if (o.n_bits != 1024 && o.n_bits != 2048) {
    throw Error(ErrorCode::InvalidArgument, "--n-bits must be 1024 or 2048");
  }
  const auto& params = nikep::reference_params(o.n_bits);
  const auto sizes = nikep::key_sizes(params);
  // Published figures: 0.256-0.512 KB public, 0.192-0.384 KB private over
  // moduli of 1024-2048 bits; each size maps to one end of the range.
  const std::size_t claimed_public = o.n_bits == 1024 ? 256 : 512;
  const std::size_t claimed_private = o.n_bits == 1024 ? 192 : 384;
  auto row = [&](const char* column, std::size_t measured, std::size_t claimed, const char* range) {
    out << "column=" << column << " measured_bytes=" << measured
        << " measured_kb=" << kilobytes(measured) << " claimed_kb=" << kilobytes(claimed)
        << " claimed_range_kb=" << range
        << " verdict=" << (measured == claimed ? "MATCH" : "DIFFER") << '\n';
  };
  out << "n_bits=" << modmath::bit_length(params.n) << '\n';
  row("public", sizes.public_bytes, claimed_public, "0.256-0.512");
  row("private", sizes.private_bytes, claimed_private, "0.192-0.384");
  return kExitOk;
}

int cmd_sim(const Options& o, const CLI::Option* seed_opt, const CLI::Option* bits_opt,
            std::ostream& out) {
  const std::uint64_t seed = seed_or_random(seed_opt, o.seed);
  const std::size_t r_bits = bits_opt->count() > 0 ? o.r_bits : kDefaultSimBits;
  const auto result = run_sim(o, seed, r_bits, true);
  for (const auto& entry : result.transcript.entries) {
    const auto cell = onioncrypt::decode_cell(entry.bytes);
    out << "step=" << entry.step << " from=" << entry.from << " to=" << entry.to
        << " cmd=" << onioncrypt::to_string(cell.command) << " circ=" << cell.circ_id
        << " bytes=" << to_hex(entry.bytes) << '\n';
  }
  out << "cells=" << result.transcript.entries.size() << '\n';
  const int code = report_circuit(result.circuits.at(kCircuitId), out);
  for (const auto& d : result.exit_deliveries) {
    out << "exit_delivery node=" << d.node << " text=" << printable(d.data) << '\n';
  }
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Onion-routing circuits over a non-invertible key exchange", "onionkep"};
  app.require_subcommand(1);

  auto* keygen = app.add_subcommand("keygen", "Generate parameters and a key pair");
  auto* keygen_bits = keygen->add_option("--r-bits", o.r_bits, "Bit length of the prime r");
  keygen->add_option("--out", o.out_path, "Output prefix (.pub and .key are appended)")->required();
  auto* keygen_seed = keygen->add_option("--seed", o.seed, "Deterministic seed");
  keygen->add_flag("--allow-small-k", o.allow_small_k, "Allow masks below r (prefix-attackable)");
  keygen->add_option("--params", o.params_file, "Reuse the parameters of an existing key file");

  auto* directory = app.add_subcommand("directory", "Run a directory server");
  directory->add_option("--params", o.params_file, "Key file carrying the parameters")->required();
  directory->add_option("--listen", o.listen, "host:port to bind");
  directory->add_option("--snapshot", o.snapshot, "Registry snapshot file");

  auto* node = app.add_subcommand("node", "Run a relay");
  node->add_option("--name", o.name, "Relay name")->required();
  node->add_option("--key", o.key_file, "Private key file")->required();
  node->add_option("--listen", o.listen, "host:port to bind");
  node->add_option("--directory", o.directory, "Directory host:port (default $ONIONKEP_DIR)");
  node->add_option("--advertise", o.advertise, "Address published in the descriptor");
  node->add_flag("--no-echo", o.no_echo, "Do not answer DATA frames as an exit");

  auto* client = app.add_subcommand("client", "Build circuits and send data");
  client->require_subcommand(1);
  CLI::Option* client_seed = nullptr;
  CLI::Option* client_bits = nullptr;
  auto add_client_flags = [&](CLI::App* sub) {
    sub->add_option("--hops", o.hops, "Comma-separated relay names, entry first");
    sub->add_flag("--sim", o.sim, "Run every role in-process on the simulator");
    sub->add_option("--relays", o.relays, "Relays hosted by the simulator");
    client_seed = sub->add_option("--seed", o.seed, "Deterministic seed");
    client_bits = sub->add_option("--r-bits", o.r_bits, "Parameter size for --sim");
    sub->add_flag("--corrupt-created", o.corrupt_created, "Flip a bit in the first CREATED");
    sub->add_option("--directory", o.directory, "Directory host:port (default $ONIONKEP_DIR)");
    sub->add_option("--params", o.params_file, "Key file carrying the parameters");
  };
  auto* build = client->add_subcommand("build", "Build a circuit and report each hop");
  add_client_flags(build);
  auto* build_seed = client_seed;
  auto* build_bits = client_bits;
  auto* send = client->add_subcommand("send", "Build a circuit and send one message");
  add_client_flags(send);
  send->add_option("--message", o.message, "Bytes to send");
  auto* send_seed = client_seed;
  auto* send_bits = client_bits;

  auto* demo = app.add_subcommand("demo", "Demonstrations");
  demo->require_subcommand(1);
  auto* prefix = demo->add_subcommand("prefix-attack", "Recover a key factor from two captures");
  prefix->add_flag("--mitigated", o.mitigated, "Use a mask above r");
  auto* prefix_seed = prefix->add_option("--seed", o.seed, "Deterministic seed");
  auto* prefix_bits = prefix->add_option("--r-bits", o.r_bits, "Parameter size (default: toy)");

  auto* bench = app.add_subcommand("bench", "Measurements");
  bench->require_subcommand(1);
  auto* keysizes = bench->add_subcommand("keysizes", "Compare key sizes with the published table");
  keysizes->add_option("--n-bits", o.n_bits, "Modulus size: 1024 or 2048");

  auto* sim = app.add_subcommand("sim", "Print the simulator transcript of a build and send");
  sim->add_option("--hops", o.hops, "Comma-separated relay names, entry first");
  sim->add_option("--relays", o.relays, "Relays hosted by the simulator");
  auto* sim_seed = sim->add_option("--seed", o.seed, "Deterministic seed");
  auto* sim_bits = sim->add_option("--r-bits", o.r_bits, "Parameter size");
  sim->add_option("--message", o.message, "Bytes to send");
  sim->add_flag("--corrupt-created", o.corrupt_created, "Flip a bit in the first CREATED");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    int code = kExitOk;
    if (keygen->parsed()) code = cmd_keygen(o, keygen_seed, keygen_bits, out);
    else if (directory->parsed()) code = cmd_directory(o, out);
    else if (node->parsed()) code = cmd_node(o, out);
    else if (build->parsed()) code = cmd_client(o, false, build_seed, build_bits, out);
    else if (send->parsed()) code = cmd_client(o, true, send_seed, send_bits, out);
    else if (prefix->parsed()) code = cmd_demo_prefix(o, prefix_seed, prefix_bits, out);
    else if (keysizes->parsed()) code = cmd_bench_keysizes(o, out);
    else if (sim->parsed()) code = cmd_sim(o, sim_seed, sim_bits, out);
    out.flush();
    return code;
  } catch (const Error& e) {
    out.flush();
    err << "error=" << to_string(e.code()) << " detail=" << e.detail() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    out.flush();
    err << "error=" << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace onionkep::cli

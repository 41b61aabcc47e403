#include "onionkep/simnet.hpp"

#include <deque>

#include "onionkep/codec.hpp"
#include "onionkep/directory.hpp"
#include "onionkep/error.hpp"

namespace onionkep::net {

using onioncrypt::Cell;
using onioncrypt::CellCommand;
using protocol::Action;
using protocol::Actions;

Bytes Transcript::serialize() const {
  Bytes out;
  for (const auto& e : entries) {
    onioncrypt::put_u64(out, e.step);
    out.push_back(static_cast<std::uint8_t>(e.from.size()));
    out.insert(out.end(), e.from.begin(), e.from.end());
    out.push_back(static_cast<std::uint8_t>(e.to.size()));
    out.insert(out.end(), e.to.begin(), e.to.end());
    onioncrypt::put_u32(out, static_cast<std::uint32_t>(e.bytes.size()));
    out.insert(out.end(), e.bytes.begin(), e.bytes.end());
  }
  return out;
}

std::vector<TranscriptEntry> Transcript::on_link(const std::string& a, const std::string& b) const {
  std::vector<TranscriptEntry> out;
  for (const auto& e : entries) {
    if ((e.from == a && e.to == b) || (e.from == b && e.to == a)) out.push_back(e);
  }
  return out;
}

std::vector<CellCommand> Transcript::commands() const {
  std::vector<CellCommand> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(onioncrypt::decode_cell(e.bytes).command);
  return out;
}

namespace {

struct InFlight {
  std::string from;
  std::string to;
  Bytes bytes;
};

class Simulation {
 public:
  explicit Simulation(const SimConfig& config)
      : config_(config),
        directory_(config.params),
        client_rng_(config.seed ^ 0x9e3779b97f4a7c15ULL) {
    modmath::SeededRandom key_rng(config.seed);
    for (const auto& relay : config.relays) {
      if (relay.name == config.client_name || result_.nodes.contains(relay.name)) {
        throw Error(ErrorCode::DuplicateName, "relay name " + relay.name + " used twice");
      }
      const nikep::KeyPair keys = relay.keys ? *relay.keys : nikep::gen_keypair(config.params, key_rng);
      directory_.register_node(make_descriptor(relay.name, "sim://" + relay.name, config.params, keys.pub));
      result_.nodes.emplace(relay.name, protocol::make_node(relay.name, config.params, keys));
    }
  }

  void run_event(const ScriptEvent& event) {
    std::visit([this](const auto& e) { apply(e); }, event);
    drain();
  }

  SimResult finish() && {
    result_.directory = directory_.list();
    return std::move(result_);
  }

 private:
  void apply(const BuildCircuit& build) {
    if (build.path.empty()) throw Error(ErrorCode::InvalidArgument, "empty circuit path");
    paths_[build.circ_id] = build.path;
    protocol::CircuitOptions options;
    options.target_hops = build.path.size();
    options.ephemeral_policy = config_.ephemeral_policy;
    auto [state, action] = protocol::client_create(config_.params, build.circ_id,
                                                   directory_.lookup(build.path.front()),
                                                   client_rng_, options);
    result_.circuits[build.circ_id] = std::move(state);
    execute(config_.client_name, {action});
  }

  void apply(const SendData& send) {
    auto it = result_.circuits.find(send.circ_id);
    if (it == result_.circuits.end()) throw Error(ErrorCode::UnknownCircuit, "no such circuit");
    execute(config_.client_name, {protocol::client_send_data(it->second, send.stream_id, send.data)});
  }

  void apply(const TamperCell& tamper) { tampers_.push_back({tamper, 0}); }
  void apply(const DropCell& drop) { drops_.push_back({drop, 0}); }

  void drain() {
    while (!queue_.empty()) {
      if (result_.steps >= config_.step_budget) {
        throw Error(ErrorCode::StepBudgetExceeded,
                    "simulation exceeded " + std::to_string(config_.step_budget) + " steps");
      }
      InFlight next = std::move(queue_.front());
      queue_.pop_front();
      ++result_.steps;
      result_.transcript.entries.push_back({result_.steps, next.from, next.to, next.bytes});

      Cell cell;
      try {
        cell = onioncrypt::decode_cell(next.bytes);
      } catch (const Error&) {
        continue;
      }
      if (next.to == config_.client_name) {
        deliver_to_client(cell);
      } else {
        auto& node = result_.nodes.at(next.to);
        auto [state, actions] = protocol::node_handle_cell(node, next.from, cell);
        node = std::move(state);
        execute(next.to, actions);
      }
    }
  }

  void deliver_to_client(const Cell& cell) {
    auto it = result_.circuits.find(cell.circ_id);
    if (it == result_.circuits.end()) return;
    auto [state, actions] = protocol::client_handle_cell(it->second, cell);
    it->second = std::move(state);
    execute(config_.client_name, actions);

    const protocol::CircuitState& circuit = it->second;
    const auto& path = paths_.at(cell.circ_id);
    if (circuit.phase == protocol::Phase::Extending && circuit.all_confirmed() &&
        circuit.hops.size() < path.size()) {
      auto [extended, action] =
          protocol::client_extend(circuit, directory_.lookup(path[circuit.hops.size()]), client_rng_);
      it->second = std::move(extended);
      execute(config_.client_name, {action});
    }
  }

  void execute(const std::string& actor, const Actions& actions) {
    for (const Action& action : actions) {
      if (const auto* send = std::get_if<protocol::SendCell>(&action)) {
        enqueue(actor, *send);
      } else if (const auto* local = std::get_if<protocol::DeliverLocal>(&action)) {
        Delivery delivery{actor, local->circ_id, local->stream_id, local->data};
        if (actor == config_.client_name) {
          result_.client_deliveries.push_back(std::move(delivery));
        } else {
          result_.exit_deliveries.push_back(std::move(delivery));
          if (config_.exit_echo) {
            execute(actor, protocol::node_send_data(result_.nodes.at(actor), local->link,
                                                    local->circ_id, local->stream_id, local->data));
          }
        }
      } else if (const auto* down = std::get_if<protocol::TearDown>(&action)) {
        result_.teardowns.push_back({actor, *down});
      }
    }
  }

  void enqueue(const std::string& from, const protocol::SendCell& send) {
    const std::string& to = send.link;
    if (to != config_.client_name && !result_.nodes.contains(to)) {
      // Nobody answers at that name: the sender sees the link fail at once.
      if (auto node = result_.nodes.find(from); node != result_.nodes.end()) {
        auto [state, actions] = protocol::node_handle_link_down(node->second, to);
        node->second = std::move(state);
        execute(from, actions);
      }
      return;
    }

    Bytes bytes = onioncrypt::encode_cell(send.cell);
    for (auto& [rule, seen] : drops_) {
      if (rule.from == from && rule.to == to && seen++ == rule.occurrence) return;
    }
    for (auto& [rule, seen] : tampers_) {
      if (rule.from != from || rule.to != to || rule.command != send.cell.command) continue;
      if (seen++ != rule.occurrence || send.cell.payload.empty()) continue;
      constexpr std::size_t kCellHeader = 7;
      bytes[kCellHeader + rule.payload_offset % send.cell.payload.size()] ^= rule.xor_mask;
    }
    queue_.push_back({from, to, std::move(bytes)});
  }

  const SimConfig& config_;
  Directory directory_;
  modmath::SeededRandom client_rng_;
  std::map<std::uint32_t, std::vector<std::string>> paths_;
  std::vector<std::pair<TamperCell, std::size_t>> tampers_;
  std::vector<std::pair<DropCell, std::size_t>> drops_;
  std::deque<InFlight> queue_;
  SimResult result_;
};

}  // namespace

SimResult simnet_run(const SimConfig& config, const std::vector<ScriptEvent>& script) {
  Simulation sim(config);
  for (const auto& event : script) sim.run_event(event);
  return std::move(sim).finish();
}

}  // namespace onionkep::net

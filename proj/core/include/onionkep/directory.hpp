#pragma once

// Name → descriptor registry and its request/response protocol.
//
// Requests and responses reuse the key-file TLV grammar:
//   0x10 register   value = descriptor fields
//   0x11 lookup     value = node name
//   0x12 list       empty value
// A response starts with 0x14 (ok, empty) or 0x1f (error: code(1) ‖ message)
// and an ok response is followed by zero or more 0x30 descriptor records.
// Snapshot files are a plain concatenation of 0x30 records.

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "onionkep/bytes.hpp"
#include "onionkep/descriptor.hpp"
#include "onionkep/nikep.hpp"

namespace onionkep::net {

namespace dirtag {
inline constexpr std::uint8_t kRegister = 0x10;
inline constexpr std::uint8_t kLookup = 0x11;
inline constexpr std::uint8_t kList = 0x12;
inline constexpr std::uint8_t kOk = 0x14;
inline constexpr std::uint8_t kError = 0x1f;
inline constexpr std::uint8_t kDescriptor = 0x30;
}  // namespace dirtag

class Directory {
 public:
  // When `snapshot` is set, an existing file is loaded and every mutation
  // rewrites it.
  explicit Directory(nikep::SystemParams params,
                     std::optional<std::filesystem::path> snapshot = std::nullopt);

  const nikep::SystemParams& params() const { return params_; }

  // ParamsMismatch when the descriptor names another parameter set;
  // DuplicateName when the name is taken by a different constructor.
  void register_node(const NodeDescriptor& desc);
  // NotFound.
  NodeDescriptor lookup(std::string_view name) const;
  // Sorted by name.
  std::vector<NodeDescriptor> list() const;

  Bytes snapshot() const;
  void restore(ByteView snapshot);

 private:
  void persist_locked() const;

  nikep::SystemParams params_;
  std::optional<std::filesystem::path> snapshot_path_;
  mutable std::mutex mutex_;
  std::map<std::string, NodeDescriptor, std::less<>> nodes_;
};

Bytes make_register_request(const NodeDescriptor& desc);
Bytes make_lookup_request(std::string_view name);
Bytes make_list_request();

// Never throws for bad input; failures come back as error responses.
Bytes handle_directory_request(Directory& directory, ByteView request);

// Throws the Error carried by an error response, else returns the
// descriptors of an ok response.
std::vector<NodeDescriptor> parse_directory_response(ByteView response);

}  // namespace onionkep::net

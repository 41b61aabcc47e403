#include "onionkep/directory.hpp"

#include <algorithm>
#include <filesystem>

#include "onionkep/codec.hpp"
#include "onionkep/error.hpp"
#include "onionkep/keyfile.hpp"

namespace onionkep::net {

using onioncrypt::append_tlv;
using onioncrypt::parse_tlv;

namespace {

constexpr std::uint8_t kName = 0x20;
constexpr std::uint8_t kAddress = 0x21;
constexpr std::uint8_t kParamsDigest = 0x22;

ByteView as_view(const std::string& s) {
  return ByteView(reinterpret_cast<const std::uint8_t*>(s.data()), s.size());
}

Bytes error_response(ErrorCode code, const std::string& message) {
  Bytes value;
  value.push_back(static_cast<std::uint8_t>(code));
  value.insert(value.end(), message.begin(), message.end());
  Bytes out;
  append_tlv(out, dirtag::kError, value);
  return out;
}

Bytes ok_response(const std::vector<NodeDescriptor>& descriptors) {
  Bytes out;
  append_tlv(out, dirtag::kOk, ByteView{});
  for (const auto& desc : descriptors) append_tlv(out, dirtag::kDescriptor, encode_descriptor(desc));
  return out;
}

}  // namespace

NodeDescriptor make_descriptor(std::string name, std::string address,
                               const nikep::SystemParams& params,
                               const nikep::PublicConstructor& pub) {
  return NodeDescriptor{std::move(name), std::move(address), pub, nikep::params_digest(params)};
}

Bytes encode_descriptor(const NodeDescriptor& desc) {
  if (desc.name.empty() || desc.name.size() > 255) {
    throw Error(ErrorCode::EncodingOverflow, "node name must be 1..255 bytes");
  }
  Bytes out;
  append_tlv(out, kName, as_view(desc.name));
  append_tlv(out, kAddress, as_view(desc.address));
  append_tlv(out, nikep::tag::kPublicP, desc.pub.p_part);
  append_tlv(out, nikep::tag::kPublicQ, desc.pub.q_part);
  append_tlv(out, kParamsDigest, desc.params_digest);
  return out;
}

NodeDescriptor decode_descriptor(ByteView fields) {
  NodeDescriptor desc;
  unsigned seen = 0;
  for (const auto& record : parse_tlv(fields, ErrorCode::MalformedPayload)) {
    switch (record.tag) {
      case kName:
        desc.name = to_string(record.value);
        seen |= 1U;
        break;
      case kAddress:
        desc.address = to_string(record.value);
        seen |= 2U;
        break;
      case nikep::tag::kPublicP:
        desc.pub.p_part = onioncrypt::int_decode(record.value);
        seen |= 4U;
        break;
      case nikep::tag::kPublicQ:
        desc.pub.q_part = onioncrypt::int_decode(record.value);
        seen |= 8U;
        break;
      case kParamsDigest:
        if (record.value.size() != desc.params_digest.size()) {
          throw Error(ErrorCode::MalformedPayload, "params digest must be 32 bytes");
        }
        std::copy(record.value.begin(), record.value.end(), desc.params_digest.begin());
        seen |= 16U;
        break;
      default:
        throw Error(ErrorCode::MalformedPayload, "unknown descriptor tag " + std::to_string(record.tag));
    }
  }
  if (seen != 31U) throw Error(ErrorCode::MalformedPayload, "descriptor is missing fields");
  if (desc.name.empty() || desc.name.size() > 255) {
    throw Error(ErrorCode::MalformedPayload, "node name must be 1..255 bytes");
  }
  return desc;
}

Directory::Directory(nikep::SystemParams params, std::optional<std::filesystem::path> snapshot)
    : params_(std::move(params)), snapshot_path_(std::move(snapshot)) {
  if (snapshot_path_ && std::filesystem::exists(*snapshot_path_)) {
    restore(nikep::read_file(*snapshot_path_));
  }
}

void Directory::register_node(const NodeDescriptor& desc) {
  if (desc.params_digest != nikep::params_digest(params_)) {
    throw Error(ErrorCode::ParamsMismatch, desc.name + " uses a different parameter set");
  }
  if (desc.name.empty() || desc.name.size() > 255) {
    throw Error(ErrorCode::InvalidArgument, "node name must be 1..255 bytes");
  }
  std::lock_guard lock(mutex_);
  auto it = nodes_.find(desc.name);
  if (it != nodes_.end() && it->second.pub != desc.pub) {
    throw Error(ErrorCode::DuplicateName, desc.name + " is registered with another key");
  }
  nodes_.insert_or_assign(desc.name, desc);
  persist_locked();
}

NodeDescriptor Directory::lookup(std::string_view name) const {
  std::lock_guard lock(mutex_);
  auto it = nodes_.find(name);
  if (it == nodes_.end()) throw Error(ErrorCode::NotFound, "no node named " + std::string(name));
  return it->second;
}

std::vector<NodeDescriptor> Directory::list() const {
  std::lock_guard lock(mutex_);
  std::vector<NodeDescriptor> out;
  out.reserve(nodes_.size());
  for (const auto& [name, desc] : nodes_) out.push_back(desc);
  return out;
}

Bytes Directory::snapshot() const {
  std::lock_guard lock(mutex_);
  Bytes out;
  for (const auto& [name, desc] : nodes_) append_tlv(out, dirtag::kDescriptor, encode_descriptor(desc));
  return out;
}

void Directory::restore(ByteView snapshot) {
  std::map<std::string, NodeDescriptor, std::less<>> loaded;
  for (const auto& record : parse_tlv(snapshot, ErrorCode::MalformedPayload)) {
    if (record.tag != dirtag::kDescriptor) {
      throw Error(ErrorCode::MalformedPayload, "snapshot holds a non-descriptor record");
    }
    NodeDescriptor desc = decode_descriptor(record.value);
    if (desc.params_digest != nikep::params_digest(params_)) {
      throw Error(ErrorCode::ParamsMismatch, "snapshot entry " + desc.name + " uses other parameters");
    }
    loaded.insert_or_assign(desc.name, std::move(desc));
  }
  std::lock_guard lock(mutex_);
  nodes_ = std::move(loaded);
}

void Directory::persist_locked() const {
  if (!snapshot_path_) return;
  Bytes out;
  for (const auto& [name, desc] : nodes_) append_tlv(out, dirtag::kDescriptor, encode_descriptor(desc));
  // Written beside the target and renamed into place.
  std::filesystem::path tmp = *snapshot_path_;
  tmp += ".tmp";
  nikep::write_file(tmp, out);
  std::filesystem::rename(tmp, *snapshot_path_);
}

Bytes make_register_request(const NodeDescriptor& desc) {
  Bytes out;
  append_tlv(out, dirtag::kRegister, encode_descriptor(desc));
  return out;
}

Bytes make_lookup_request(std::string_view name) {
  Bytes out;
  append_tlv(out, dirtag::kLookup, ByteView(reinterpret_cast<const std::uint8_t*>(name.data()), name.size()));
  return out;
}

Bytes make_list_request() {
  Bytes out;
  append_tlv(out, dirtag::kList, ByteView{});
  return out;
}

Bytes handle_directory_request(Directory& directory, ByteView request) {
  try {
    const auto records = parse_tlv(request, ErrorCode::MalformedPayload);
    if (records.size() != 1) throw Error(ErrorCode::MalformedPayload, "expected one request record");
    const auto& record = records.front();
    switch (record.tag) {
      case dirtag::kRegister:
        directory.register_node(decode_descriptor(record.value));
        return ok_response({});
      case dirtag::kLookup:
        return ok_response({directory.lookup(to_string(record.value))});
      case dirtag::kList:
        return ok_response(directory.list());
      default:
        throw Error(ErrorCode::MalformedPayload, "unknown request tag " + std::to_string(record.tag));
    }
  } catch (const Error& e) {
    return error_response(e.code(), e.detail());
  }
}

std::vector<NodeDescriptor> parse_directory_response(ByteView response) {
  const auto records = parse_tlv(response, ErrorCode::MalformedPayload);
  if (records.empty()) throw Error(ErrorCode::MalformedPayload, "empty directory response");
  const auto& status = records.front();
  if (status.tag == dirtag::kError) {
    if (status.value.empty()) throw Error(ErrorCode::MalformedPayload, "error response without code");
    const auto code = static_cast<ErrorCode>(status.value.front());
    throw Error(code, std::string(status.value.begin() + 1, status.value.end()));
  }
  if (status.tag != dirtag::kOk) throw Error(ErrorCode::MalformedPayload, "bad response status");
  std::vector<NodeDescriptor> out;
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].tag != dirtag::kDescriptor) {
      throw Error(ErrorCode::MalformedPayload, "unexpected record in response");
    }
    out.push_back(decode_descriptor(records[i].value));
  }
  return out;
}

}  // namespace onionkep::net

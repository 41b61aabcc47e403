#include "onionkep/wire.hpp"

#include <algorithm>

#include "onionkep/codec.hpp"
#include "onionkep/error.hpp"

namespace onionkep::onioncrypt {

namespace {

void put_residue(Bytes& out, const Natural& v, std::size_t width) {
  Bytes encoded = int_encode(v, width);
  out.insert(out.end(), encoded.begin(), encoded.end());
}

Natural take_residue(ByteReader& reader, const nikep::SystemParams& params) {
  Natural v = int_decode(reader.take(residue_width(params.n)));
  if (v >= params.n) throw Error(ErrorCode::MalformedPayload, "residue not below n");
  return v;
}

void put_create(Bytes& out, const CreateBody& body, const nikep::SystemParams& params) {
  const std::size_t width = residue_width(params.n);
  put_residue(out, body.handshake.value, width);
  put_residue(out, body.constructor.p_part, width);
  put_residue(out, body.constructor.q_part, width);
}

CreateBody take_create(ByteReader& reader, const nikep::SystemParams& params) {
  CreateBody body;
  body.handshake.value = take_residue(reader, params);
  body.constructor.p_part = take_residue(reader, params);
  body.constructor.q_part = take_residue(reader, params);
  return body;
}

}  // namespace

std::string_view to_string(CellCommand command) noexcept {
  switch (command) {
    case CellCommand::Create: return "CREATE";
    case CellCommand::Created: return "CREATED";
    case CellCommand::Relay: return "RELAY";
    case CellCommand::Destroy: return "DESTROY";
  }
  return "?";
}

std::string_view to_string(RelayCommand command) noexcept {
  switch (command) {
    case RelayCommand::Extend: return "EXTEND";
    case RelayCommand::Extended: return "EXTENDED";
    case RelayCommand::Data: return "DATA";
    case RelayCommand::Connected: return "CONNECTED";
    case RelayCommand::End: return "END";
  }
  return "?";
}

Bytes encode_cell(const Cell& cell) {
  if (cell.payload.size() > kMaxPayload) {
    throw Error(ErrorCode::EncodingOverflow, "cell payload over 65535 bytes");
  }
  Bytes out;
  out.reserve(7 + cell.payload.size());
  put_u32(out, cell.circ_id);
  out.push_back(static_cast<std::uint8_t>(cell.command));
  put_u16(out, static_cast<std::uint16_t>(cell.payload.size()));
  out.insert(out.end(), cell.payload.begin(), cell.payload.end());
  return out;
}

Cell decode_cell(ByteView bytes) {
  ByteReader reader(bytes, ErrorCode::TruncatedCell);
  Cell cell;
  cell.circ_id = reader.u32();
  const std::uint8_t command = reader.u8();
  if (command < 0x01 || command > 0x04) {
    throw Error(ErrorCode::UnknownCommand, "cell command " + std::to_string(command));
  }
  cell.command = static_cast<CellCommand>(command);
  const std::uint16_t length = reader.u16();
  ByteView payload = reader.take(length);
  cell.payload.assign(payload.begin(), payload.end());
  reader.expect_done();
  return cell;
}

Bytes encode_relay_frame(const RelayFrame& frame) {
  if (frame.data.size() > kMaxPayload) {
    throw Error(ErrorCode::EncodingOverflow, "relay data over 65535 bytes");
  }
  Bytes out;
  out.reserve(5 + frame.data.size());
  out.push_back(static_cast<std::uint8_t>(frame.command));
  put_u16(out, frame.stream_id);
  put_u16(out, static_cast<std::uint16_t>(frame.data.size()));
  out.insert(out.end(), frame.data.begin(), frame.data.end());
  return out;
}

RelayFrame decode_relay_frame(ByteView bytes) {
  ByteReader reader(bytes, ErrorCode::TruncatedFrame);
  RelayFrame frame;
  const std::uint8_t command = reader.u8();
  if (command < 0x01 || command > 0x05) {
    throw Error(ErrorCode::UnknownSubcommand, "relay subcommand " + std::to_string(command));
  }
  frame.command = static_cast<RelayCommand>(command);
  frame.stream_id = reader.u16();
  const std::uint16_t length = reader.u16();
  ByteView data = reader.take(length);
  frame.data.assign(data.begin(), data.end());
  reader.expect_done();
  return frame;
}

Bytes encode_create(const CreateBody& body, const nikep::SystemParams& params) {
  Bytes out;
  put_create(out, body, params);
  return out;
}

CreateBody decode_create(ByteView bytes, const nikep::SystemParams& params) {
  ByteReader reader(bytes, ErrorCode::TruncatedFrame);
  CreateBody body = take_create(reader, params);
  reader.expect_done();
  return body;
}

Bytes encode_created(const CreatedBody& body, const nikep::SystemParams& params) {
  Bytes out;
  put_residue(out, body.handshake.value, residue_width(params.n));
  out.insert(out.end(), body.digest.begin(), body.digest.end());
  return out;
}

CreatedBody decode_created(ByteView bytes, const nikep::SystemParams& params) {
  ByteReader reader(bytes, ErrorCode::TruncatedFrame);
  CreatedBody body;
  body.handshake.value = take_residue(reader, params);
  ByteView digest = reader.take(body.digest.size());
  std::copy(digest.begin(), digest.end(), body.digest.begin());
  reader.expect_done();
  return body;
}

Bytes encode_extend(const ExtendBody& body, const nikep::SystemParams& params) {
  if (body.node_name.empty() || body.node_name.size() > 255) {
    throw Error(ErrorCode::EncodingOverflow, "node name must be 1..255 bytes");
  }
  Bytes out;
  out.push_back(static_cast<std::uint8_t>(body.node_name.size()));
  out.insert(out.end(), body.node_name.begin(), body.node_name.end());
  put_create(out, body.create, params);
  return out;
}

ExtendBody decode_extend(ByteView bytes, const nikep::SystemParams& params) {
  ByteReader reader(bytes, ErrorCode::TruncatedFrame);
  ExtendBody body;
  const std::uint8_t name_length = reader.u8();
  body.node_name = onionkep::to_string(reader.take(name_length));
  body.create = take_create(reader, params);
  reader.expect_done();
  return body;
}

}  // namespace onionkep::onioncrypt

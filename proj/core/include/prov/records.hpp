#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "prov/errors.hpp"

namespace prov {

// Audit-log ingestion: JSON-lines records in a CDM-like shape are parsed
// into ParsedRecord values. Malformed lines never abort a stream; they are
// counted and reported.

enum class RecordKind { subject, file_object, netflow_object, event, principal };

constexpr const char* record_kind_name(RecordKind k) noexcept {
  switch (k) {
    case RecordKind::subject: return "Subject";
    case RecordKind::file_object: return "FileObject";
    case RecordKind::netflow_object: return "NetFlowObject";
    case RecordKind::event: return "Event";
    case RecordKind::principal: return "Principal";
  }
  return "Unknown";
}

std::optional<RecordKind> record_kind_from(std::string_view name);

// Known event verbs. Unrecognized type strings map to `other` with the
// original name preserved, so downstream type maps can still index them.
enum class EventKind {
  read,
  write,
  execute,
  fork,
  modify_process,
  change_principal,
  connect,
  sendto,
  recvfrom,
  other,
};

struct EventType {
  EventKind kind = EventKind::other;
  std::string name;

  static EventType from_name(std::string name);
  friend bool operator==(const EventType&, const EventType&) = default;
};

struct RawLine {
  std::string text;
  std::size_t line_number = 0;
};

struct ParsedRecord {
  RecordKind record_kind = RecordKind::event;
  std::string uuid;
  std::optional<EventType> event_type;      // present iff record_kind == event
  std::optional<std::string> subject_uuid;  // required for events
  std::optional<std::string> object_uuid;
  std::uint64_t timestamp_ns = 0;
  std::optional<std::string> path;

  friend bool operator==(const ParsedRecord&, const ParsedRecord&) = default;
};

// Field names and validation patterns for one JSON-lines dialect. The
// default matches the CDM-like shape used throughout this project.
struct RecordSchema {
  std::string record_key = "record";
  std::string uuid_key = "uuid";
  std::string type_key = "type";
  std::string subject_key = "subject";
  std::string object_key = "predicateObject";
  std::string timestamp_key = "timestampNanos";
  std::string path_key = "path";
  std::regex uuid_pattern{
      "[0-9a-fA-F]{8}-[0-9a-fA-F]{4}-[0-9a-fA-F]{4}-"
      "[0-9a-fA-F]{4}-[0-9a-fA-F]{12}"};

  static const RecordSchema& standard();
};

bool is_canonical_uuid(std::string_view s);

struct ParseError {
  Errc code = Errc::malformed_json;
  std::string message;
};

struct ParseResult {
  std::optional<ParsedRecord> record;
  std::optional<ParseError> error;
  bool ok() const noexcept { return record.has_value(); }
};

struct ParseReport {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::vector<std::pair<std::size_t, std::string>> rejects;  // (line_number, reason)
};

ParseResult parse_line(const RawLine& line,
                       const RecordSchema& schema = RecordSchema::standard());

// Inverse of parse_line on accepted records: emits one JSON object with
// exactly the schema's fields, absent optionals omitted.
std::string record_to_json(const ParsedRecord& r,
                           const RecordSchema& schema = RecordSchema::standard());

std::pair<std::vector<ParsedRecord>, ParseReport> parse_stream(
    std::istream& in, const RecordSchema& schema = RecordSchema::standard());

// Throws Errc::io_failure if the file cannot be opened.
std::pair<std::vector<ParsedRecord>, ParseReport> parse_file(
    const std::string& path, const RecordSchema& schema = RecordSchema::standard());

std::string report_to_json(const ParseReport& report);

}  // namespace prov

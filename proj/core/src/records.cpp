#include "prov/records.hpp"

#include <array>
#include <fstream>
#include <istream>
#include <sstream>

#include <json.hpp>

namespace prov {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<EventKind, const char*>, 9> kKnownEvents{{
    {EventKind::read, "EVENT_READ"},
    {EventKind::write, "EVENT_WRITE"},
    {EventKind::execute, "EVENT_EXECUTE"},
    {EventKind::fork, "EVENT_FORK"},
    {EventKind::modify_process, "EVENT_MODIFY_PROCESS"},
    {EventKind::change_principal, "EVENT_CHANGE_PRINCIPAL"},
    {EventKind::connect, "EVENT_CONNECT"},
    {EventKind::sendto, "EVENT_SENDTO"},
    {EventKind::recvfrom, "EVENT_RECVFROM"},
}};

bool is_blank(std::string_view s) {
  for (char c : s) {
    if (c != ' ' && c != '\t' && c != '\r' && c != '\n') return false;
  }
  return true;
}

ParseResult fail(Errc code, std::string message) {
  return ParseResult{std::nullopt, ParseError{code, std::move(message)}};
}

}  // namespace

std::optional<RecordKind> record_kind_from(std::string_view name) {
  if (name == "Subject") return RecordKind::subject;
  if (name == "FileObject") return RecordKind::file_object;
  if (name == "NetFlowObject") return RecordKind::netflow_object;
  if (name == "Event") return RecordKind::event;
  if (name == "Principal") return RecordKind::principal;
  return std::nullopt;
}

EventType EventType::from_name(std::string name) {
  for (const auto& [kind, known] : kKnownEvents) {
    if (name == known) return EventType{kind, std::move(name)};
  }
  return EventType{EventKind::other, std::move(name)};
}

const RecordSchema& RecordSchema::standard() {
  static const RecordSchema schema{};
  return schema;
}

bool is_canonical_uuid(std::string_view s) {
  static constexpr std::array<int, 4> dash_at{8, 13, 18, 23};
  if (s.size() != 36) return false;
  std::size_t d = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (d < dash_at.size() && static_cast<int>(i) == dash_at[d]) {
      if (s[i] != '-') return false;
      ++d;
    } else if (!std::isxdigit(static_cast<unsigned char>(s[i]))) {
      return false;
    }
  }
  return true;
}

ParseResult parse_line(const RawLine& line, const RecordSchema& schema) {
  json doc = json::parse(line.text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) {
    return fail(Errc::malformed_json, "line is not a JSON object");
  }

  auto uuid_field = [&](const std::string& key,
                        std::string& out) -> std::optional<ParseError> {
    const auto it = doc.find(key);
    if (it == doc.end() || !it->is_string()) {
      return ParseError{Errc::missing_field, "missing field: " + key};
    }
    out = it->get<std::string>();
    if (!std::regex_match(out, schema.uuid_pattern)) {
      return ParseError{Errc::bad_uuid, key + " does not match the uuid pattern"};
    }
    return std::nullopt;
  };

  const auto kind_it = doc.find(schema.record_key);
  if (kind_it == doc.end() || !kind_it->is_string()) {
    return fail(Errc::missing_field, "missing field: " + schema.record_key);
  }
  const auto kind = record_kind_from(kind_it->get<std::string>());
  if (!kind) {
    return fail(Errc::bad_value,
                "unknown record kind: " + kind_it->get<std::string>());
  }

  ParsedRecord rec;
  rec.record_kind = *kind;
  if (auto err = uuid_field(schema.uuid_key, rec.uuid)) {
    return ParseResult{std::nullopt, std::move(err)};
  }

  if (const auto ts = doc.find(schema.timestamp_key); ts != doc.end()) {
    if (!ts->is_number_integer() || ts->get<std::int64_t>() < 0) {
      return fail(Errc::bad_value, schema.timestamp_key + " must be a non-negative integer");
    }
    rec.timestamp_ns = ts->get<std::uint64_t>();
  }

  if (const auto p = doc.find(schema.path_key); p != doc.end() && p->is_string()) {
    rec.path = p->get<std::string>();
  }

  if (rec.record_kind == RecordKind::event) {
    const auto type_it = doc.find(schema.type_key);
    if (type_it == doc.end() || !type_it->is_string()) {
      return fail(Errc::missing_field, "missing field: " + schema.type_key);
    }
    rec.event_type = EventType::from_name(type_it->get<std::string>());

    std::string subject;
    if (auto err = uuid_field(schema.subject_key, subject)) {
      return ParseResult{std::nullopt, std::move(err)};
    }
    rec.subject_uuid = std::move(subject);

    if (doc.contains(schema.object_key)) {
      std::string object;
      if (auto err = uuid_field(schema.object_key, object)) {
        return ParseResult{std::nullopt, std::move(err)};
      }
      rec.object_uuid = std::move(object);
    }
  }

  return ParseResult{std::move(rec), std::nullopt};
}

std::string record_to_json(const ParsedRecord& r, const RecordSchema& schema) {
  json doc;
  doc[schema.record_key] = record_kind_name(r.record_kind);
  doc[schema.uuid_key] = r.uuid;
  if (r.event_type) doc[schema.type_key] = r.event_type->name;
  if (r.subject_uuid) doc[schema.subject_key] = *r.subject_uuid;
  if (r.object_uuid) doc[schema.object_key] = *r.object_uuid;
  doc[schema.timestamp_key] = r.timestamp_ns;
  if (r.path) doc[schema.path_key] = *r.path;
  return doc.dump();
}

std::pair<std::vector<ParsedRecord>, ParseReport> parse_stream(
    std::istream& in, const RecordSchema& schema) {
  std::vector<ParsedRecord> records;
  ParseReport report;
  std::string text;
  std::size_t line_number = 0;
  while (std::getline(in, text)) {
    ++line_number;
    if (is_blank(text)) {
      ++report.rejected;
      report.rejects.emplace_back(line_number, "empty line");
      continue;
    }
    auto result = parse_line(RawLine{std::move(text), line_number}, schema);
    if (result.ok()) {
      ++report.accepted;
      records.push_back(std::move(*result.record));
    } else {
      ++report.rejected;
      report.rejects.emplace_back(line_number, result.error->message);
    }
    text.clear();
  }
  if (in.bad()) {
    raise(Errc::io_failure, "stream read failed at line " + std::to_string(line_number));
  }
  return {std::move(records), std::move(report)};
}

std::pair<std::vector<ParsedRecord>, ParseReport> parse_file(
    const std::string& path, const RecordSchema& schema) {
  std::ifstream in(path);
  if (!in) {
    raise(Errc::io_failure, "cannot open " + path);
  }
  return parse_stream(in, schema);
}

std::string report_to_json(const ParseReport& report) {
  json doc;
  doc["accepted"] = report.accepted;
  doc["rejected"] = report.rejected;
  json rejects = json::array();
  for (const auto& [line, reason] : report.rejects) {
    rejects.push_back({{"line", line}, {"reason", reason}});
  }
  doc["rejects"] = std::move(rejects);
  return doc.dump(2);
}

}  // namespace prov

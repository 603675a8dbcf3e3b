#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "prov/records.hpp"
#include "prov/rng.hpp"

using namespace prov;

namespace {

ParsedRecord must_parse(const std::string& text) {
  auto result = parse_line(RawLine{text, 1});
  REQUIRE(result.ok());
  return *result.record;
}

ParseError must_fail(const std::string& text) {
  auto result = parse_line(RawLine{text, 1});
  REQUIRE_FALSE(result.ok());
  return *result.error;
}

}  // namespace

TEST_CASE("event line parses with all fields") {
  const auto rec = must_parse(
      R"({"record":"Event","uuid":"CA352F0F-3E59-11E8-A5CB-3FA3753A265A",)"
      R"("type":"EVENT_READ","subject":"9A717117-65ED-675C-AD65-38102C67C832",)"
      R"("predicateObject":"308E149F-F225-9859-A5F2-8C9BB9983D48","timestampNanos":0})");
  CHECK(rec.record_kind == RecordKind::event);
  CHECK(rec.uuid == "CA352F0F-3E59-11E8-A5CB-3FA3753A265A");
  REQUIRE(rec.event_type.has_value());
  CHECK(rec.event_type->kind == EventKind::read);
  CHECK(rec.event_type->name == "EVENT_READ");
  CHECK(rec.subject_uuid == "9A717117-65ED-675C-AD65-38102C67C832");
  CHECK(rec.object_uuid == "308E149F-F225-9859-A5F2-8C9BB9983D48");
  CHECK(rec.timestamp_ns == 0);
}

TEST_CASE("entity line parses without event fields") {
  const auto rec = must_parse(
      R"({"record":"FileObject","uuid":"00000000-0000-0000-0000-000000000000","timestampNanos":0})");
  CHECK(rec.record_kind == RecordKind::file_object);
  CHECK(rec.uuid == "00000000-0000-0000-0000-000000000000");
  CHECK_FALSE(rec.event_type.has_value());
  CHECK_FALSE(rec.subject_uuid.has_value());
}

TEST_CASE("missing uuid is reported by name") {
  const auto err = must_fail(R"({"record":"Subject","timestampNanos":1})");
  CHECK(err.code == Errc::missing_field);
  CHECK(err.message.find("uuid") != std::string::npos);
}

TEST_CASE("malformed json is rejected") {
  CHECK(must_fail(R"({"record":"Subject")").code == Errc::malformed_json);
  CHECK(must_fail("not json at all").code == Errc::malformed_json);
  CHECK(must_fail("[1,2,3]").code == Errc::malformed_json);
}

TEST_CASE("uuid pattern violations are rejected") {
  CHECK(must_fail(R"({"record":"Subject","uuid":"nope"})").code == Errc::bad_uuid);
  CHECK(must_fail(R"({"record":"Subject","uuid":"GGGGGGGG-0000-0000-0000-000000000000"})")
            .code == Errc::bad_uuid);
  // Separators in the wrong position.
  CHECK(must_fail(R"({"record":"Subject","uuid":"0000000-00000-0000-0000-000000000000"})")
            .code == Errc::bad_uuid);
}

TEST_CASE("event requires type and subject") {
  CHECK(must_fail(
            R"({"record":"Event","uuid":"00000000-0000-0000-0000-000000000001","subject":"00000000-0000-0000-0000-000000000002"})")
            .code == Errc::missing_field);
  CHECK(must_fail(
            R"({"record":"Event","uuid":"00000000-0000-0000-0000-000000000001","type":"EVENT_READ"})")
            .code == Errc::missing_field);
}

TEST_CASE("unknown event type maps to the catch-all with the original name") {
  const auto rec = must_parse(
      R"({"record":"Event","uuid":"00000000-0000-0000-0000-000000000001",)"
      R"("type":"EVENT_MMAP","subject":"00000000-0000-0000-0000-000000000002"})");
  REQUIRE(rec.event_type.has_value());
  CHECK(rec.event_type->kind == EventKind::other);
  CHECK(rec.event_type->name == "EVENT_MMAP");
}

TEST_CASE("unknown record kind is rejected") {
  CHECK(must_fail(R"({"record":"MemoryObject","uuid":"00000000-0000-0000-0000-000000000001"})")
            .code == Errc::bad_value);
}

TEST_CASE("negative timestamp is rejected") {
  CHECK(must_fail(
            R"({"record":"Subject","uuid":"00000000-0000-0000-0000-000000000001","timestampNanos":-5})")
            .code == Errc::bad_value);
}

TEST_CASE("unknown fields are ignored") {
  const auto rec = must_parse(
      R"({"record":"Subject","uuid":"00000000-0000-0000-0000-000000000001",)"
      R"("cid":77,"parentSubject":null,"startTimestampNanos":123})");
  CHECK(rec.record_kind == RecordKind::subject);
}

TEST_CASE("round-trip: serialize then reparse yields the identical record") {
  Rng rng(7);
  static const char* types[] = {"EVENT_READ", "EVENT_WRITE", "EVENT_EXECUTE",
                                "EVENT_CUSTOM_X"};
  for (int i = 0; i < 200; ++i) {
    ParsedRecord r;
    char uuid[37];
    std::snprintf(uuid, sizeof(uuid), "%08llx-1111-2222-3333-%012llx",
                  static_cast<unsigned long long>(rng.next_u64() & 0xffffffff),
                  static_cast<unsigned long long>(i));
    const int kind = static_cast<int>(rng.below(5));
    r.record_kind = static_cast<RecordKind>(kind);
    r.uuid = uuid;
    r.timestamp_ns = rng.next_u64() % 1000000;
    if (r.record_kind == RecordKind::event) {
      r.event_type = EventType::from_name(types[rng.below(4)]);
      r.subject_uuid = "00000000-0000-0000-0000-00000000aaaa";
      if (rng.bernoulli(0.7)) {
        r.object_uuid = "00000000-0000-0000-0000-00000000bbbb";
      }
    }
    if (rng.bernoulli(0.3)) r.path = "/etc/group";
    const auto back = parse_line(RawLine{record_to_json(r), 1});
    REQUIRE(back.ok());
    CHECK(*back.record == r);
  }
}

TEST_CASE("parse_stream on empty input") {
  std::istringstream in("");
  const auto [records, report] = parse_stream(in);
  CHECK(records.empty());
  CHECK(report.accepted == 0);
  CHECK(report.rejected == 0);
}

TEST_CASE("parse_stream skips malformed lines and reports them") {
  std::istringstream in(
      R"({"record":"Subject","uuid":"00000000-0000-0000-0000-000000000001"})"
      "\n"
      R"({"record":"Subject","uuid":"00000000-0000-0000-0000-000000000002"})"
      "\n"
      "{broken\n"
      R"({"record":"Subject","uuid":"00000000-0000-0000-0000-000000000003"})"
      "\n");
  const auto [records, report] = parse_stream(in);
  CHECK(records.size() == 3);
  CHECK(report.accepted == 3);
  CHECK(report.rejected == 1);
  REQUIRE(report.rejects.size() == 1);
  CHECK(report.rejects[0].first == 3);
}

TEST_CASE("parse_stream preserves input order") {
  std::ostringstream lines;
  for (int i = 0; i < 50; ++i) {
    char uuid[37];
    std::snprintf(uuid, sizeof(uuid), "00000000-0000-0000-0000-%012x", i);
    lines << R"({"record":"Subject","uuid":")" << uuid << R"("})" << '\n';
  }
  std::istringstream in(lines.str());
  const auto [records, report] = parse_stream(in);
  REQUIRE(records.size() == 50);
  for (int i = 0; i < 50; ++i) {
    char uuid[37];
    std::snprintf(uuid, sizeof(uuid), "00000000-0000-0000-0000-%012x", i);
    CHECK(records[static_cast<std::size_t>(i)].uuid == uuid);
  }
}

TEST_CASE("stream concatenation equals concatenated streams") {
  const std::string a =
      R"({"record":"Subject","uuid":"00000000-0000-0000-0000-000000000001"})"
      "\nnot json\n";
  const std::string b =
      R"({"record":"FileObject","uuid":"00000000-0000-0000-0000-000000000002"})"
      "\n";
  std::istringstream sa(a), sb(b), sab(a + b);
  const auto [ra, rep_a] = parse_stream(sa);
  const auto [rb, rep_b] = parse_stream(sb);
  const auto [rab, rep_ab] = parse_stream(sab);
  std::vector<ParsedRecord> joined = ra;
  joined.insert(joined.end(), rb.begin(), rb.end());
  CHECK(rab == joined);
  CHECK(rep_ab.accepted == rep_a.accepted + rep_b.accepted);
  CHECK(rep_ab.rejected == rep_a.rejected + rep_b.rejected);
}

TEST_CASE("rejection is total: every line is accepted or reported") {
  Rng rng(99);
  std::ostringstream lines;
  std::size_t total = 0;
  for (int i = 0; i < 120; ++i) {
    ++total;
    switch (rng.below(4)) {
      case 0:
        lines << R"({"record":"Subject","uuid":"00000000-0000-0000-0000-000000000001"})";
        break;
      case 1:
        lines << "garbage " << i;
        break;
      case 2:
        lines << R"({"record":"Subject"})";
        break;
      default:
        lines << "   ";  // blank line
        break;
    }
    lines << '\n';
  }
  std::istringstream in(lines.str());
  const auto [records, report] = parse_stream(in);
  CHECK(report.accepted + report.rejected == total);
  CHECK(records.size() == report.accepted);
  CHECK(report.rejects.size() == report.rejected);
}

TEST_CASE("report serializes with the documented keys") {
  ParseReport report;
  report.accepted = 2;
  report.rejected = 1;
  report.rejects.emplace_back(3, "missing field: uuid");
  const std::string text = report_to_json(report);
  CHECK(text.find("\"accepted\"") != std::string::npos);
  CHECK(text.find("\"rejected\"") != std::string::npos);
  CHECK(text.find("\"rejects\"") != std::string::npos);
  CHECK(text.find("missing field: uuid") != std::string::npos);
}

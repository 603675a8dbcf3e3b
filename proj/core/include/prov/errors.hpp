#pragma once

#include <stdexcept>
#include <string>

namespace prov {

// Domain error codes. Every throwing operation in the library raises
// prov::Error with one of these; the CLI maps them to exit code 1 and,
// with --json-errors, to a structured stderr object.
enum class Errc {
  malformed_json,
  missing_field,
  bad_uuid,
  bad_value,
  io_failure,
  dangling_reference,
  infeasible_split,
  shape_mismatch,
  length_mismatch,
  empty_mask,
  empty_input,
  degenerate_labels,
  stale_cache,
  entropy_failure,
  primality_timeout,
  out_of_range,
  key_mismatch,
  invalid_ciphertext,
  overflow,
  incomplete_round,
  invalid_scenario,
  config_error,
};

constexpr const char* errc_name(Errc c) noexcept {
  switch (c) {
    case Errc::malformed_json: return "MalformedJson";
    case Errc::missing_field: return "MissingField";
    case Errc::bad_uuid: return "BadUuid";
    case Errc::bad_value: return "BadValue";
    case Errc::io_failure: return "IoFailure";
    case Errc::dangling_reference: return "DanglingReference";
    case Errc::infeasible_split: return "InfeasibleSplit";
    case Errc::shape_mismatch: return "ShapeMismatch";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::empty_mask: return "EmptyMask";
    case Errc::empty_input: return "EmptyInput";
    case Errc::degenerate_labels: return "DegenerateLabels";
    case Errc::stale_cache: return "StaleCache";
    case Errc::entropy_failure: return "EntropyFailure";
    case Errc::primality_timeout: return "PrimalityTimeout";
    case Errc::out_of_range: return "OutOfRange";
    case Errc::key_mismatch: return "KeyMismatch";
    case Errc::invalid_ciphertext: return "InvalidCiphertext";
    case Errc::overflow: return "Overflow";
    case Errc::incomplete_round: return "IncompleteRound";
    case Errc::invalid_scenario: return "InvalidScenario";
    case Errc::config_error: return "ConfigError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }
  const char* code_name() const noexcept { return errc_name(code_); }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace prov

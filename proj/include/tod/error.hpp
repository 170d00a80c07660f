#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <variant>

namespace tod {

enum class ErrorKind {
  ParseError,
  MissingField,
  UnknownAction,
  UnknownLastTool,
  UnknownSlot,
  ValueNotInClosedSet,
  ParametersNotJson,
  InformationNotList,
  SchemaDomainMismatch,
  DomainMismatch,
  MissingRouteEndpoints,
  FileMissing,
  MalformedRecord,
  BadConfig,
  BackendError,
  Timeout,
  HttpStatus,
  NoScriptMatch,
  OracleMissingAnnotation,
  EmptyCompletion,
  EmptyCorpus,
  AlignmentMismatch,
  MissingPrediction,
  StageError,
  NoCorruptionPossible,
  InsufficientPool,
  ThresholdOutOfRange,
  MissingGoldState,
  Io,
};

const char* to_string(ErrorKind kind);

class TodError : public std::runtime_error {
 public:
  TodError(ErrorKind kind, std::string detail)
      : std::runtime_error(std::string(to_string(kind)) + ": " + detail),
        kind_(kind),
        detail_(std::move(detail)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

template <typename T>
class Result {
 public:
  Result(T value) : value_(std::move(value)) {}
  Result(TodError error) : value_(std::move(error)) {}

  bool ok() const noexcept { return std::holds_alternative<T>(value_); }
  explicit operator bool() const noexcept { return ok(); }

  const T& value() const& { return std::get<T>(value_); }
  T& value() & { return std::get<T>(value_); }
  T&& take() && { return std::get<T>(std::move(value_)); }
  const TodError& error() const { return std::get<TodError>(value_); }

 private:
  std::variant<T, TodError> value_;
};

}  // namespace tod

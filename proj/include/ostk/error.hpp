#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ostk {

enum class ErrorKind {
  range,
  coverage,
  validation,
  degenerate_projection,
  insufficient,
  degenerate,
  shape,
  state,
  schema,
  config,
  pipeline,
  data_quality,
  empty,
  generation,
};

const char* to_string(ErrorKind kind);

/// Base exception for every failure raised by the library. `frames()` carries
/// offending frame indices when the failure is tied to specific frames.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, std::vector<std::int64_t> frames = {})
      : std::runtime_error(what), kind_(kind), frames_(std::move(frames)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::vector<std::int64_t>& frames() const noexcept { return frames_; }

 private:
  ErrorKind kind_;
  std::vector<std::int64_t> frames_;
};

/// Wraps a failure from one stage of a pipeline run. The original kind is kept.
class PipelineError : public Error {
 public:
  PipelineError(std::string stage, const Error& cause)
      : Error(ErrorKind::pipeline, stage + " stage: " + cause.what(), cause.frames()),
        stage_(std::move(stage)),
        cause_kind_(cause.kind()) {}

  const std::string& stage() const noexcept { return stage_; }
  ErrorKind cause_kind() const noexcept { return cause_kind_; }

 private:
  std::string stage_;
  ErrorKind cause_kind_;
};

}  // namespace ostk

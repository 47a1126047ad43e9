#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace detmask {

// Base for every data error raised by the pipeline. The CLI maps these to
// exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedLine : public Error {
 public:
  MalformedLine(std::string source, std::size_t line, const std::string& why)
      : Error(source + ":" + std::to_string(line) + ": " + why),
        source_(std::move(source)),
        line_(line) {}
  std::size_t line() const { return line_; }
  const std::string& source() const { return source_; }

 private:
  std::string source_;
  std::size_t line_;
};

class DanglingReference : public Error {
 public:
  explicit DanglingReference(std::string id)
      : Error("dangling reference: " + id), id_(std::move(id)) {}
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

class EmptyDataset : public Error {
 public:
  EmptyDataset() : Error("dataset has no samples") {}
};

class NoMaskableContent : public Error {
 public:
  explicit NoMaskableContent(const std::string& scheme)
      : Error("no maskable content for scheme " + scheme) {}
};

class NoClues : public Error {
 public:
  NoClues() : Error("sample has no clue tokens") {}
};

class InsufficientContext : public Error {
 public:
  InsufficientContext(std::size_t other, std::size_t clues)
      : Error("only " + std::to_string(other) + " context tokens for " +
              std::to_string(clues) + " clue tokens") {}
};

class SequenceTooLong : public Error {
 public:
  SequenceTooLong(std::size_t len, std::size_t max_len)
      : Error("sequence length " + std::to_string(len) + " exceeds max_len " +
              std::to_string(max_len)) {}
};

class EmptyMaskSet : public Error {
 public:
  EmptyMaskSet() : Error("empty mask set") {}
};

class NoMask : public Error {
 public:
  NoMask() : Error("cloze input has no mask position") {}
};

class NonFiniteLoss : public Error {
 public:
  explicit NonFiniteLoss(long step)
      : Error("non-finite loss at step " + std::to_string(step)), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

class BadTemplate : public Error {
 public:
  explicit BadTemplate(const std::string& pattern)
      : Error("template must contain exactly one [X] and one [Y]: " + pattern) {}
};

class MissingPrediction : public Error {
 public:
  explicit MissingPrediction(std::size_t question)
      : Error("missing prediction for question " + std::to_string(question)),
        question_(question) {}
  std::size_t question() const { return question_; }

 private:
  std::size_t question_;
};

}  // namespace detmask

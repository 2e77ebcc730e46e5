// -*-c++-*----------------------------------------------------------------------------------------
// Copyright 2026 The FIBAR Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FIBAR__ERRORS_HPP_
#define FIBAR__ERRORS_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fibar
{
// Base class for everything the library throws. The CLI maps the
// subclasses onto exit codes.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

// bad arguments or parameter combinations (exit code 2)
class ParamError : public Error
{
public:
  using Error::Error;
};

// malformed input files (exit code 3)
class FormatError : public Error
{
public:
  using Error::Error;
};

class TruncationError : public FormatError
{
public:
  TruncationError(const std::string & msg, uint64_t offset)
  : FormatError(msg + " at byte offset " + std::to_string(offset)), offset_(offset)
  {
  }
  uint64_t offset() const { return (offset_); }

private:
  uint64_t offset_;
};

class ParseError : public FormatError
{
public:
  ParseError(const std::string & msg, uint64_t line)
  : FormatError("line " + std::to_string(line) + ": " + msg), line_(line)
  {
  }
  uint64_t line() const { return (line_); }

private:
  uint64_t line_;
};

// well-formed records with invalid content, e.g. pixel outside the sensor
class DataError : public FormatError
{
public:
  DataError(const std::string & msg, uint64_t index)
  : FormatError("record " + std::to_string(index) + ": " + msg), index_(index)
  {
  }
  explicit DataError(const std::string & msg) : FormatError(msg), index_(0) {}
  uint64_t index() const { return (index_); }

private:
  uint64_t index_;
};

// timestamps going backwards on write
class OrderError : public Error
{
public:
  using Error::Error;
};

// value does not fit the target encoding
class RangeError : public Error
{
public:
  using Error::Error;
};

// internal bookkeeping went wrong (exit code 4)
class InvariantError : public Error
{
public:
  using Error::Error;
};

}  // namespace fibar
#endif  // FIBAR__ERRORS_HPP_

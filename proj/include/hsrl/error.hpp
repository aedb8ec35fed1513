#pragma once

#include <stdexcept>
#include <string>

namespace hsrl {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error
{
public:
    ParseError(const std::string& what, int line, int column)
        : Error(what + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")"),
          line_(line), column_(column) {}

    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

class InvalidInstance : public Error { public: using Error::Error; };
class UnsolvableGeneration : public Error { public: using Error::Error; };
class EmptyCandidateSet : public Error { public: using Error::Error; };
class GenerationError : public Error { public: using Error::Error; };
class DegenerateGroup : public Error { public: using Error::Error; };
class DegenerateRange : public Error { public: using Error::Error; };
class NoVisitedChild : public Error { public: using Error::Error; };
class RemoteError : public Error { public: using Error::Error; };
class UpdateUnsupported : public RemoteError { public: using RemoteError::RemoteError; };

/// Configuration problem; `path` is the dotted field path, e.g. "search.gamma".
class ConfigError : public Error
{
public:
    ConfigError(const std::string& path, const std::string& what)
        : Error(path + ": " + what), path_(path) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

}  // namespace hsrl

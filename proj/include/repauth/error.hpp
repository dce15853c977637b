#pragma once

#include <stdexcept>
#include <string>

namespace repauth
{

enum class Errc
{
    InsufficientBudget, // multicast budget leaves no room for a signature
    InvalidParams,
    TooLarge,           // enumeration bound exceeded
    HeightMismatch,
    BadLink,
    BadSignature,
    BadLength,
    UnknownServer,
    Config,
    Io,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error
{
  public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code)
    {
    }

    Errc code() const noexcept { return code_; }

  private:
    Errc code_;
};

} // namespace repauth

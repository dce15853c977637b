#include "repauth/error.hpp"

namespace repauth
{

const char* errc_name(Errc code)
{
    switch (code)
    {
        case Errc::InsufficientBudget: return "InsufficientBudget";
        case Errc::InvalidParams:      return "InvalidParams";
        case Errc::TooLarge:           return "TooLarge";
        case Errc::HeightMismatch:     return "HeightMismatch";
        case Errc::BadLink:            return "BadLink";
        case Errc::BadSignature:       return "BadSignature";
        case Errc::BadLength:          return "BadLength";
        case Errc::UnknownServer:      return "UnknownServer";
        case Errc::Config:             return "Config";
        case Errc::Io:                 return "Io";
    }
    return "Unknown";
}

} // namespace repauth

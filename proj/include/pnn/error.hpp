#pragma once

#include <stdexcept>
#include <string>

namespace pnn {

// Raised for every contract violation (bad dimensions, invalid parameters,
// malformed files). Callers that need finer control match on the message.
class Error : public std::runtime_error
{
public:
	explicit Error(const std::string &what) : std::runtime_error(what) {}
};

inline void require(bool ok, const std::string &what)
{
	if (!ok)
		throw Error(what);
}

} // namespace pnn

// Single include point for JSON. ordered_json keeps object fields in
// insertion order so serialized documents match the documented layouts.
#pragma once

#include "json.hpp"

namespace so3tengen {
using Json = nlohmann::ordered_json;
}

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "svs/tensor.h"

namespace svs {

// A named-tensor archive with a JSON metadata document.  Doubles are stored
// raw, so values round-trip exactly; tensor order is preserved.
struct Snapshot {
  std::string meta_json;
  std::vector<std::pair<std::string, Tensor>> tensors;
};

void save_snapshot(const std::string& path, const Snapshot& snap);
Snapshot load_snapshot(const std::string& path);

}  // namespace svs

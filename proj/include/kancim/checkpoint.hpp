#ifndef KANCIM_CHECKPOINT_HPP_
#define KANCIM_CHECKPOINT_HPP_

#include <iosfwd>
#include <string>

#include "kancim/spline.hpp"

namespace kancim {

// Text checkpoint, header "kancim-model v1". Doubles travel as %.17g so
// a save/load cycle is bit-exact. The stream variants let other formats
// embed a model block; the block is self-delimiting.
void save_model(const KanModel& model, std::ostream& out);
KanModel load_model(std::istream& in);

void save_model(const KanModel& model, const std::string& path);
KanModel load_model(const std::string& path);

}  // namespace kancim

#endif

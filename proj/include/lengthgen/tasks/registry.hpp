#pragma once

#include <memory>
#include <string>
#include <vector>

#include "lengthgen/tasks/add1.hpp"
#include "lengthgen/tasks/add3.hpp"
#include "lengthgen/tasks/arctan.hpp"
#include "lengthgen/tasks/arith_f7.hpp"
#include "lengthgen/tasks/ko.hpp"
#include "lengthgen/tasks/mul1.hpp"

namespace lengthgen {

inline std::vector<std::string> symbolic_task_ids() {
  return {"arith_f7", "add1", "add3", "mul1", "ko"};
}

inline std::unique_ptr<SymbolicTask> make_task(const std::string& id) {
  if (id == "arith_f7" || id == "f7") return std::make_unique<ArithF7Task>();
  if (id == "add1") return std::make_unique<Add1Task>();
  if (id == "add3") return std::make_unique<Add3Task>();
  if (id == "mul1") return std::make_unique<Mul1Task>();
  if (id == "ko") return std::make_unique<KoTask>();
  throw std::invalid_argument("unknown task '" + id + "'");
}

}  // namespace lengthgen

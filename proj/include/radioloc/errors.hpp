#pragma once

#include <stdexcept>

namespace radioloc {

// Error taxonomy shared by the library and the CLI exit-code mapping
// (config -> 2, data -> 3, numeric -> 4; contract/state misuse -> 2).

class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class data_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class contract_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operation attempted on an object that is not in the required state,
// e.g. applying scalers that were never fitted.
class state_error : public contract_error {
 public:
  using contract_error::contract_error;
};

}  // namespace radioloc

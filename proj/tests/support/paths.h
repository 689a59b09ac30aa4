#pragma once

#include <string>

#ifndef SELLF_TEST_DATA_DIR
#error "SELLF_TEST_DATA_DIR must point at the shipped environment tables"
#endif

namespace sellf::testing {

inline std::string DataDir() { return SELLF_TEST_DATA_DIR; }

}  // namespace sellf::testing

#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "dsrsd/log.hpp"

int main(int argc, char** argv) {
  dsrsd::set_warnings_enabled(false);
  doctest::Context context(argc, argv);
  return context.run();
}

#include <doctest.h>

TEST_SUITE_BEGIN("cli_io");
TEST_SUITE_END();

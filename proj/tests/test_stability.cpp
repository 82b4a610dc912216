#include <doctest.h>

TEST_SUITE_BEGIN("stability");
TEST_SUITE_END();

#include <catch2/catch_amalgamated.hpp>
int main_disabled;

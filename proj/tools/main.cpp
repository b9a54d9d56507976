#include <cstdio>

int main() {
  std::puts("gdash: subcommands pending");
  return 0;
}

#include <string>
#include <vector>

#include "app/commands.hpp"

int main(int argc, char** argv) {
  return boxcast::app::run(std::vector<std::string>(argv, argv + argc));
}

#include <iostream>

int main() {
  std::cout << "wse: placeholder\n";
  return 0;
}

#include <cstdio>

int main() {
    std::puts("relsym cli placeholder");
    return 0;
}

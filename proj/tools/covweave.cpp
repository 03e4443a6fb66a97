#include <cstdio>

int main() {
    std::puts("covweave: CLI wired up later in the build");
    return 0;
}

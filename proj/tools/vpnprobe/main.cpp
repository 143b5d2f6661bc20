// Placeholder entry point; the subcommand wiring lands with the CLI module.
#include <cstdio>

int main() {
    std::fprintf(stderr, "vpnprobe: no subcommand wired up yet\n");
    return 2;
}

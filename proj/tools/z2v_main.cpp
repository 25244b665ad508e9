// z2v: numerical workbench for the Z2-staggered six-vertex chain and its
// scaling limit. Subcommands are wired up as the corresponding modules land.

#include "CLI11.hpp"

int main(int argc, char** argv) {
    CLI::App app{"z2v: staggered six-vertex scaling workbench"};
    app.require_subcommand(0);
    CLI11_PARSE(app, argc, argv);
    return 0;
}

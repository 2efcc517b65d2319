#include "sedbox/cli.hpp"

int main(int argc, char** argv) { return sedbox::run_cli(argc, argv); }

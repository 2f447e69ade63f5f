#include "smtabc/cli.hpp"

int main(int argc, char** argv) { return smtabc::cli::run(argc, argv); }

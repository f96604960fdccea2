#include "survml/app.hpp"

int main(int argc, char** argv) { return survml::app::run(argc, argv); }

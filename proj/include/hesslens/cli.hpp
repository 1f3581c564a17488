#pragma once
namespace hesslens { int cli_main(int argc, char** argv); }

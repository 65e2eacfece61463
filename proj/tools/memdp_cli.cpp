#include "memdp/memdp.hpp"
int main(){ return 0; }
